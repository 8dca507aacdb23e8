"""Self-similar profile by shooting on the elliptic equation

    ((n-1)/m) lap(v^m) + alpha v + beta r v' = 0,   v > 0,

whose solution with far field A r^{-q} is the t=1 slice of the self-similar
solution psi(x, t) = t^{-alpha} v(t^{-beta} x).

The origin is a regular singular point, so integration starts from the
two-term series v = lambda + c r^2 with c = -alpha lambda^{2-m} / (2n(n-1))
and marches outward with an adaptive high-order Runge-Kutta method.  The
far-field amplitude r^q v approaches its limit like r^{-1/beta}, which is what
the Richardson extrapolation in ``far_field_amplitude`` exploits.  For the
target amplitude, a bisection on the central value lambda is used; the map
lambda -> A is checked for monotonicity on the fly since only uniqueness of
the profile, not monotonicity of the shooting map, is guaranteed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .core import Exponents, ModelParams, compute_exponents, validate_params
from .exact import barenblatt, BarenblattSpec, comparison_constants

__all__ = [
    "Profile",
    "ProfileConfig",
    "Shot",
    "NoBracket",
    "NonMonotoneAmplitudeMap",
    "SandwichReport",
    "ode_residual",
    "shoot",
    "far_field_amplitude",
    "solve_profile",
    "psi",
    "sandwich_check",
]


class NoBracket(RuntimeError):
    """Bracket expansion for the central value failed."""


class NonMonotoneAmplitudeMap(RuntimeError):
    """The sampled lambda -> A map is not monotone; bisection is unreliable."""


@dataclass(frozen=True)
class ProfileConfig:
    r_max: Optional[float] = None  # default 100/beta
    rtol: float = 1e-11
    atol: float = 1e-13
    match_rtol: float = 1e-4  # |A_achieved - A_target| < match_rtol * A_target
    max_doublings: int = 60
    fine_step: float = 2e-3  # sample spacing on the stored interior grid
    fine_span: float = 6.0  # interior span stored at fine_step resolution
    coarse_cells: int = 600  # geometric cells from fine_span to r_max


@dataclass(frozen=True)
class Profile:
    """Converged profile: central value, samples, achieved far-field amplitude."""

    lam: float
    grid: np.ndarray
    values: np.ndarray
    A_achieved: float
    A_spread: float
    exps: Exponents
    n: int
    m: float

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        g.setflags(write=False)
        v.setflags(write=False)
        if g.shape != v.shape or g.ndim != 1:
            raise ValueError("grid and values must be matching 1-d arrays")
        if np.any(v <= 0.0):
            raise ValueError("profile values must be strictly positive")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def interpolate(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > self.grid[-1] * (1.0 + 1e-12)):
            raise ValueError(f"radius outside profile grid [0, {self.grid[-1]:g}]")
        out = np.interp(r, self.grid, self.values)
        return float(out) if out.ndim == 0 else out


def ode_residual(r, v, dv, d2v, params: ModelParams, exps: Exponents):
    """((n-1)/m)[(v^m)'' + ((n-1)/r)(v^m)'] + alpha v + beta r v', chain rule expanded."""
    n, m = params.n, params.m
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    dv = np.asarray(dv, dtype=float)
    d2v = np.asarray(d2v, dtype=float)
    wm_d1 = m * v ** (m - 1.0) * dv
    wm_d2 = m * (m - 1.0) * v ** (m - 2.0) * dv**2 + m * v ** (m - 1.0) * d2v
    out = (n - 1) / m * (wm_d2 + (n - 1) / r * wm_d1) + exps.alpha * v + exps.beta * r * dv
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Shot:
    """Outcome of one outward integration."""

    outcome: str  # "reached" | "undershoot" | "overshoot"
    lam: float
    r_start: float
    r_end: float
    sol: object  # scipy OdeSolution (dense)

    def v(self, r):
        return self.sol(np.asarray(r, dtype=float))[0]


def _series_start(lam: float, r: float, n: int, m: float, alpha: float):
    c = -alpha * lam ** (2.0 - m) / (2.0 * n * (n - 1))
    return lam + c * r**2, 2.0 * c * r, c


def shoot(
    lam: float,
    r_max: float,
    params: ModelParams,
    exps: Exponents,
    tol: float = 1e-11,
    atol: float = 1e-13,
) -> Shot:
    """Integrate outward from the series start at r = 1e-4 * r_max.

    Undershoot (v -> 0) and overshoot (v' > 0 while v exceeds 2 lambda) are
    reported as outcomes, not raised.
    """
    if lam <= 0.0:
        raise ValueError("lambda must be positive")
    n, m = params.n, params.m
    alpha, beta = exps.alpha, exps.beta

    def rhs(r, y):
        v, dv = y
        d2v = (
            (1.0 - m) * dv * dv / v
            - (n - 1) * dv / r
            - (alpha * v + beta * r * dv) / ((n - 1) * v ** (m - 1.0))
        )
        return (dv, d2v)

    floor = 1e-10 * lam

    def undershoot_ev(r, y):
        return y[0] - floor

    undershoot_ev.terminal = True
    undershoot_ev.direction = -1

    def overshoot_ev(r, y):
        return y[0] - 2.0 * lam

    overshoot_ev.terminal = True
    overshoot_ev.direction = 1

    r_start = 1e-4 * r_max
    v0, dv0, _ = _series_start(lam, r_start, n, m, alpha)
    sol = solve_ivp(
        rhs,
        (r_start, r_max),
        (v0, dv0),
        method="DOP853",
        rtol=tol,
        atol=atol,
        events=(undershoot_ev, overshoot_ev),
        dense_output=True,
    )
    if not sol.success and sol.status != 1:
        raise RuntimeError(f"integrator failed: {sol.message}")
    if sol.status == 1:
        outcome = "undershoot" if sol.t_events[0].size else "overshoot"
    else:
        outcome = "reached"
    return Shot(outcome=outcome, lam=lam, r_start=r_start, r_end=float(sol.t[-1]), sol=sol.sol)


def far_field_amplitude(shot: Shot, exps: Exponents) -> tuple[float, float]:
    """(A_est, spread): Richardson extrapolation of r^q v(r) between r_end and r_end/2.

    The amplitude converges like r^{-1/beta}; the spread reported is the size
    of the extrapolation correction, an estimate of the truncation error.
    Undershoot shots are rejected.
    """
    if shot.outcome != "reached":
        raise ValueError(f"far field undefined for a {shot.outcome} shot")
    q = exps.q
    s = 1.0 / exps.beta
    r1 = shot.r_end
    a1 = r1**q * float(shot.v(r1))
    a2 = (r1 / 2.0) ** q * float(shot.v(r1 / 2.0))
    w = 2.0**s
    A = (w * a1 - a2) / (w - 1.0)
    return A, abs(A - a1)


def solve_profile(
    A_target: float,
    params: ModelParams,
    cfg: ProfileConfig = ProfileConfig(),
) -> Profile:
    """Bisection on the central value lambda until the far-field amplitude matches.

    Undershoot means lambda was too small.  Raises NoBracket when doubling or
    halving lambda ``cfg.max_doublings`` times never brackets the target, and
    NonMonotoneAmplitudeMap when the sampled amplitude map contradicts the
    monotone trend the bisection relies on.
    """
    if A_target <= 0.0:
        raise ValueError("A_target must be positive")
    bad = validate_params(params, asymptotics=True)
    if bad:
        raise ValueError("params not admissible for the asymptotics: " + "; ".join(bad))
    exps = compute_exponents(params.q, params.m)
    r_max = cfg.r_max if cfg.r_max is not None else 100.0 / exps.beta

    seen: list[tuple[float, float]] = []  # (lam, A) for monotonicity diagnostics

    def amplitude(lam: float) -> Optional[float]:
        shot = shoot(lam, r_max, params, exps, tol=cfg.rtol, atol=cfg.atol)
        if shot.outcome != "reached":
            return None  # treated as "lambda too small" below
        A, _ = far_field_amplitude(shot, exps)
        seen.append((lam, A))
        return A

    lo = hi = A_target  # dimensionally sane first guess
    A_hi = amplitude(hi)
    for _ in range(cfg.max_doublings):
        if A_hi is not None and A_hi >= A_target:
            break
        lo, hi = hi, hi * 2.0
        A_hi = amplitude(hi)
    else:
        raise NoBracket(f"no upper bracket within {cfg.max_doublings} doublings")
    A_lo = amplitude(lo)
    for _ in range(cfg.max_doublings):
        if A_lo is None or A_lo < A_target:
            break
        hi, lo = lo, lo / 2.0
        A_lo = amplitude(lo)
    else:
        raise NoBracket(f"no lower bracket within {cfg.max_doublings} halvings")

    lam = 0.5 * (lo + hi)
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        A_mid = amplitude(lam)
        if A_mid is not None and abs(A_mid - A_target) < cfg.match_rtol * A_target:
            break
        if A_mid is None or A_mid < A_target:
            lo = lam
        else:
            hi = lam
        if hi - lo < 1e-15 * hi:
            raise NoBracket("bisection interval collapsed before matching the amplitude")
    else:
        raise NoBracket("bisection did not converge in 200 iterations")

    _check_monotone(seen)

    shot = shoot(lam, r_max, params, exps, tol=cfg.rtol, atol=cfg.atol)
    A_achieved, spread = far_field_amplitude(shot, exps)
    grid, values = _sample_curve(shot, lam, params, exps, cfg, r_max)
    return Profile(
        lam=lam,
        grid=grid,
        values=values,
        A_achieved=A_achieved,
        A_spread=spread,
        exps=exps,
        n=params.n,
        m=params.m,
    )


def _check_monotone(seen: list[tuple[float, float]], rel_tol: float = 1e-7) -> None:
    pts = sorted(seen)
    for (l1, a1), (l2, a2) in zip(pts, pts[1:]):
        if a2 < a1 * (1.0 - rel_tol):
            raise NonMonotoneAmplitudeMap(
                f"A({l2:g}) = {a2:.8g} < A({l1:g}) = {a1:.8g}"
            )


def _sample_curve(shot, lam, params, exps, cfg, r_max):
    """Fine uniform samples near the origin, geometric out to r_max."""
    span = min(cfg.fine_span, r_max / 2.0)
    fine = np.arange(0.0, span, cfg.fine_step)
    coarse = np.geomspace(span, r_max, cfg.coarse_cells)
    grid = np.concatenate([fine, coarse])
    values = np.empty_like(grid)
    inside = grid < shot.r_start
    alpha = exps.alpha
    v_ser, _, _ = _series_start(lam, grid[inside], params.n, params.m, alpha)
    values[inside] = v_ser
    values[~inside] = shot.v(grid[~inside])
    return grid, values


def psi(r, t, profile: Profile):
    """Self-similar solution psi(r, t) = t^{-alpha} v(t^{-beta} r); needs t > 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("psi is defined for t > 0")
    r = np.asarray(r, dtype=float)
    rho = t**(-profile.exps.beta) * r
    return t**(-profile.exps.alpha) * profile.interpolate(rho)


@dataclass(frozen=True)
class SandwichReport:
    upper_ok: bool
    lower_ok: bool
    upper_margin: float  # max over samples of r^q v / A - 1  (<= slack when ok)
    lower_margin: float  # min over samples of v/bound - 1    (>= -slack when ok)
    t_check: float  # time at which the Barenblatt lower bound was evaluated


def sandwich_check(
    profile: Profile,
    A: float,
    params: ModelParams,
    slack: float = 1e-3,
) -> SandwichReport:
    """Two-sided bounds on the profile: A r^{-q} above, a Barenblatt member below.

    Upper: v(r) <= A r^{-q} (1 + slack) at every sampled r > 0.  Lower: with
    (T_c, k_c) from comparison_constants, psi >= B_{k_c} at all times; the
    check is evaluated at t=1 when T_c > 1 and otherwise at the early time
    t = T_c/20, mapped onto the profile through the self-similar scaling.  (At
    t=1 the Barenblatt would already be extinct; near T_c it has decayed so
    far that the comparison carries no information.  Early times approach the
    initial-data domination, where the bound is tight.)
    """
    n, m, q = params.n, params.m, params.q
    T_c, k_c = comparison_constants(A, q, n, m)
    r = profile.grid
    v = profile.values
    pos = r > 0.0
    upper_margin = float(np.max(v[pos] * r[pos] ** q) / A - 1.0)

    t0 = 1.0 if T_c > 1.0 else T_c / 20.0
    alpha, beta = profile.exps.alpha, profile.exps.beta
    spec = BarenblattSpec(k=k_c, T=T_c)
    bound = t0**alpha * np.asarray(barenblatt(t0**beta * r, t0, spec, n, m))
    ok = bound > 0.0
    lower_margin = float(np.min(v[ok] / bound[ok] - 1.0)) if np.any(ok) else math.inf
    return SandwichReport(
        upper_ok=upper_margin <= slack,
        lower_ok=lower_margin >= -slack,
        upper_margin=upper_margin,
        lower_margin=lower_margin,
        t_check=t0,
    )
