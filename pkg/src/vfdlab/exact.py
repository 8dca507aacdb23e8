"""Closed-form Barenblatt solutions of u_t = ((n-1)/m) lap(u^m) and derived constants.

The family

    B_k(x, t) = (C* / (k + (T-t)_+^{2/(n-2-nm)} |x|^2))^{1/(1-m)} (T-t)_+^{n/(n-2-nm)},
    C* = 2(n-1)(n-2-nm)/(1-m),

is an exact classical solution on R^n x (0, T) that vanishes identically at
time T.  It only exists for 0 < m < (n-2)/n strictly; at m = (n-2)/n the
constant C* degenerates to zero and every operation here rejects that case
rather than returning a meaningless zero field.

Everything in this module is a pure function of its arguments; these are the
exact oracles the solver and the asymptotics checks are tested against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BarenblattSpec",
    "cstar",
    "barenblatt",
    "barenblatt_pde_residual",
    "comparison_constants",
    "barenblatt_growth_limit",
    "sphere_area",
]


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n (2*pi^{n/2}/Gamma(n/2))."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class BarenblattSpec:
    """Shape constant k > 0 and extinction time T > 0 of one family member."""

    k: float
    T: float

    def __post_init__(self):
        if not (self.k > 0.0 and math.isfinite(self.k)):
            raise ValueError(f"k must be positive and finite, got {self.k}")
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive and finite, got {self.T}")


def _require_subcritical(n: int, m: float) -> None:
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 0.0 < m < (n - 2) / n:
        raise ValueError(
            f"Barenblatt family needs 0 < m < (n-2)/n = {(n - 2) / n:.6g} strictly, got m={m}"
        )


def cstar(n: int, m: float) -> float:
    """C* = 2(n-1)(n-2-nm)/(1-m); positive iff m < (n-2)/n, zero at the boundary."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 0.0 < m < 1.0:
        raise ValueError(f"m must lie in (0, 1), got {m}")
    return 2.0 * (n - 1) * (n - 2 - n * m) / (1.0 - m)


def barenblatt(r, t, spec: BarenblattSpec, n: int, m: float):
    """Evaluate B_k(r, t); vectorized in r and t, zero for t >= T."""
    _require_subcritical(n, m)
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("radius must be nonnegative")
    sigma = n - 2 - n * m
    rem = np.maximum(spec.T - t, 0.0)
    cst = cstar(n, m)
    val = (cst / (spec.k + rem ** (2.0 / sigma) * r**2)) ** (1.0 / (1.0 - m)) * rem ** (
        n / sigma
    )
    if val.ndim == 0:
        return float(val)
    return val


def barenblatt_pde_residual(
    spec: BarenblattSpec,
    n: int,
    m: float,
    points,
    h: float = 1e-4,
) -> float:
    """Max |u_t - ((n-1)/m) lap(u^m)| over (r, t) points, by central differences.

    Second-order differencing on the closed form: refining h by 2 should cut
    the residual by about 4.  Points must satisfy r > h; times beyond T give
    an identically zero function and hence zero residual.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 2:
        raise ValueError("points must be an iterable of (r, t) pairs")
    rr, tt = pts[:, 0], pts[:, 1]
    if np.any(rr <= h):
        raise ValueError("sample radii must exceed the differencing step")

    def u(r, t):
        return np.asarray(barenblatt(r, t, spec, n, m))

    ut = (u(rr, tt + h) - u(rr, tt - h)) / (2.0 * h)
    w0 = u(rr, tt) ** m
    wp = u(rr + h, tt) ** m
    wm = u(rr - h, tt) ** m
    w_rr = (wp - 2.0 * w0 + wm) / h**2
    w_r = (wp - wm) / (2.0 * h)
    lap = w_rr + (n - 1) / rr * w_r
    return float(np.max(np.abs(ut - (n - 1) / m * lap)))


def comparison_constants(A: float, q: float, n: int, m: float) -> tuple[float, float]:
    """(T_c, k_c) such that B_{k_c}(x, 0) with extinction time T_c sits below A|x|^{-q}.

    T_c = (A / (q(1-m) C*^{1/(1-m)}))^{(n-2-mn)/n} and
    k_c = (2/(q(1-m)) - 1)^{1-m} T_c^{-2 alpha (1-m)/(n-2-nm)} with
    alpha = q/(2-q(1-m)).  Requires 0 < q < 2/(1-m) and m < (n-2)/n.
    """
    _require_subcritical(n, m)
    if A <= 0.0:
        raise ValueError(f"A must be positive, got {A}")
    if not 0.0 < q < 2.0 / (1.0 - m):
        raise ValueError(f"need 0 < q < 2/(1-m) = {2.0 / (1.0 - m):.6g}, got q={q}")
    sigma = n - 2 - n * m
    alpha = q / (2.0 - q * (1.0 - m))
    cst_pow = cstar(n, m) ** (1.0 / (1.0 - m))
    T_c = (A / (q * (1.0 - m) * cst_pow)) ** (sigma / n)
    k_c = (2.0 / (q * (1.0 - m)) - 1.0) ** (1.0 - m) * T_c ** (
        -2.0 * alpha * (1.0 - m) / sigma
    )
    return T_c, k_c


def barenblatt_growth_limit(spec: BarenblattSpec, n: int, m: float) -> float:
    """Limit of R^{-(n-2/(1-m))} int_{B_R} B_k(x,0) dx as R -> infinity.

    Equals omega_n C*^{1/(1-m)} T^{1/(1-m)} / (n - 2/(1-m)); independent of k.
    """
    _require_subcritical(n, m)
    denom = n - 2.0 / (1.0 - m)
    if denom <= 0.0:
        raise ValueError("needs n - 2/(1-m) > 0, i.e. m < (n-2)/n strictly")
    p = 1.0 / (1.0 - m)
    return sphere_area(n) * cstar(n, m) ** p * spec.T**p / denom
