"""Growth-average existence criterion, extinction bounds and the weak-form identity.

The growth average G(R) = R^{-(n-2/(1-m))} int_{B_R} u0 dx separates the
regimes: a diverging liminf guarantees a global positive solution, while
finite values set the time scale of extinction.  The unquantified constants
of the underlying estimates (C1, C2, ...) are calibration inputs here, never
silent defaults.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    Composite,
    InitialData,
    ModelParams,
    PowerLaw,
    Trajectory,
)
from .exact import sphere_area

__all__ = [
    "GrowthReport",
    "TestFunction",
    "growth_average",
    "growth_criterion_report",
    "extinction_lower_bound",
    "weak_form_residual",
    "positivity_floor",
    "adaptive_simpson",
]


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-8,
    max_depth: int = 48,
) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""
    if b <= a:
        raise ValueError("need b > a")

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, depth):
        x1 = 0.5 * (x0 + x2)
        lm, rm = 0.5 * (x0 + x1), 0.5 * (x1 + x2)
        flm, frm = f(lm), f(rm)
        left = simpson(x0, x1, f0, flm, f1)
        right = simpson(x1, x2, f1, frm, f2)
        if depth <= 0:
            return left + right
        err = left + right - whole
        if abs(err) <= 15.0 * rel_tol * (abs(left + right) + 1e-300):
            return left + right + err / 15.0
        return recurse(x0, x1, f0, flm, f1, left, depth - 1) + recurse(
            x1, x2, f1, frm, f2, right, depth - 1
        )

    mid = 0.5 * (a + b)
    fa, fm, fb = f(a), f(mid), f(b)
    return recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), max_depth)


def _growth_exponent(params: ModelParams) -> float:
    e = params.n - 2.0 / (1.0 - params.m)
    if e < -1e-12:
        raise ValueError("growth average needs n - 2/(1-m) >= 0, i.e. m <= (n-2)/n")
    return max(e, 0.0)


def _ball_integral(data: InitialData, R: float, n: int, rel_tol: float) -> float:
    """omega_n int_0^R u0(r) r^{n-1} dr; closed forms for power laws, quadrature otherwise."""
    if isinstance(data, PowerLaw):
        if data.q >= n:
            raise ValueError(f"power-law integral diverges at the origin for q >= n (q={data.q})")
        return sphere_area(n) * data.A * R ** (n - data.q) / (n - data.q)
    if isinstance(data, Composite):
        return _ball_integral(data.base, R, n, rel_tol) + _ball_integral(
            data.perturbation, R, n, rel_tol
        )

    def integrand(r):
        return float(data.evaluate(r)) * r ** (n - 1)

    return sphere_area(n) * adaptive_simpson(integrand, 0.0, R, rel_tol=rel_tol)


def growth_average(
    data: InitialData, R: float, params: ModelParams, rel_tol: float = 1e-8
) -> float:
    """G(R) = R^{-(n - 2/(1-m))} * int_{B_R} u0 dx.

    Symbolic for power laws (the sampling cap is a grid artifact and does not
    enter), additive over composites, adaptive Simpson for tabulated data.  At
    m = (n-2)/n the exponent vanishes and G reduces to the plain ball integral.
    """
    if R <= 0.0:
        raise ValueError("R must be positive")
    e = _growth_exponent(params)
    return _ball_integral(data, R, params.n, rel_tol) / R**e


@dataclass(frozen=True)
class GrowthReport:
    """G over a radius ladder with the fitted tail trend.

    classification is one of diverging / bounded / vanishing / inconclusive,
    from the log-log slope of the tail half of the ladder.  threshold_ok is
    set when a horizon T and calibration constant C1 were supplied: it records
    whether the tail liminf estimate reaches C1 * T^{1/(1-m)}.
    """

    radii: np.ndarray
    averages: np.ndarray
    classification: str
    fitted_slope: float
    threshold: Optional[float] = None
    threshold_ok: Optional[bool] = None


def growth_criterion_report(
    data: InitialData,
    params: ModelParams,
    R_list: Sequence[float],
    T: Optional[float] = None,
    C1: Optional[float] = None,
    slope_tol: float = 0.05,
) -> GrowthReport:
    """Classify the growth trend of G(R) over an increasing radius ladder.

    The tail half of log G vs log R is fit by least squares; slope above
    +slope_tol means diverging (the global-existence regime), below -slope_tol
    vanishing, in between bounded.  C1 is a calibration input: when given
    (together with T), the report also states whether min(tail G) clears
    C1 * T^{1/(1-m)}.
    """
    radii = np.asarray(list(R_list), dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) <= 0.0) or radii[0] <= 0.0:
        raise ValueError("R_list must be at least 3 increasing positive radii")
    if (T is None) != (C1 is None):
        raise ValueError("supply T and C1 together or not at all")
    G = np.array([growth_average(data, R, params) for R in radii])

    tail = slice(radii.size // 2, None)
    Gt = G[tail]
    if np.all(G < 1e-300):
        classification, slope = "vanishing", -math.inf
    elif np.any(Gt <= 0.0):
        classification, slope = "vanishing", -math.inf
    else:
        x = np.log(radii[tail])
        y = np.log(Gt)
        slope = float(np.polyfit(x, y, 1)[0])
        if slope > slope_tol:
            classification = "diverging"
        elif slope < -slope_tol:
            classification = "vanishing"
        else:
            classification = "bounded"

    threshold = threshold_ok = None
    if C1 is not None:
        threshold = C1 * T ** (1.0 / (1.0 - params.m))
        threshold_ok = bool(np.min(Gt) >= threshold)
    return GrowthReport(
        radii=radii,
        averages=G,
        classification=classification,
        fitted_slope=slope,
        threshold=threshold,
        threshold_ok=threshold_ok,
    )


def extinction_lower_bound(
    data: InitialData, R: float, params: ModelParams, C2: Optional[float] = None
) -> float:
    """C2 R^2 [int_{B_R} u0 dx / Vol(B_3R minus B_2R)]^{1-m}.

    C2 is a calibration constant that the underlying estimate never
    quantifies; it must be supplied (calibrate on one reference case, then
    hold fixed).
    """
    if C2 is None:
        raise ValueError("C2 must be supplied; the bound's constant is a calibration input")
    if C2 <= 0.0 or R <= 0.0:
        raise ValueError("C2 and R must be positive")
    n, m = params.n, params.m
    mass = _ball_integral(data, R, n, rel_tol=1e-8)
    if mass == 0.0:
        return 0.0
    vol = sphere_area(n) / n * ((3.0 * R) ** n - (2.0 * R) ** n)
    return C2 * R**2 * (mass / vol) ** (1.0 - m)


@dataclass(frozen=True)
class TestFunction:
    """C^2 radial test function vanishing on the boundary sphere.

    value, laplacian, time_derivative are callables of (r, t); normal_derivative
    is a callable of t giving the outward derivative at r_max.
    """

    __test__ = False  # the PDE's test function, not a pytest case

    value: Callable
    laplacian: Callable
    time_derivative: Callable
    normal_derivative: Callable


def weak_form_residual(
    traj: Trajectory,
    eta: TestFunction,
    g: Union[float, Callable[[float], float]],
    t1: float,
    t2: float,
) -> float:
    """Mismatch of the boundary-aware integral identity on the sampled trajectory.

    Evaluates

        int_{t1}^{t2} int ((n-1)/m u^m lap(eta) + u eta_t)
          - (n-1)/m int_{t1}^{t2} g^m d(eta)/dn |bdry| dt
          - [ int u eta ]_{t1}^{t2}

    by the midpoint rule in r and the trapezoid rule in t over the trajectory
    samples inside [t1, t2].  The eta-weighted endpoint masses are what the
    divergence-theorem derivation of the identity produces.  The test function
    must vanish on the boundary sphere (checked by sampling).
    """
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    if traj.m is None:
        raise ValueError("trajectory does not record its diffusion exponent m")
    return _weak_form_residual(traj, eta, g, t1, t2, traj.grid.n, traj.m)


def _weak_form_residual(traj, eta, g, t1, t2, n, m):
    grid = traj.grid
    R = grid.r_max
    times = traj.times
    sel = (times >= t1 - 1e-12) & (times <= t2 + 1e-12)
    ts = times[sel]
    if ts.size < 2 or abs(ts[0] - t1) > 1e-9 or abs(ts[-1] - t2) > 1e-9:
        raise ValueError("t1 and t2 must be sampled trajectory times")
    for t in (t1, 0.5 * (t1 + t2), t2):
        if abs(eta.value(R, t)) > 1e-9 * (abs(eta.value(0.0, t)) + 1e-300):
            raise ValueError("test function does not vanish on the boundary sphere")

    c = grid.centers
    w = grid.cell_volumes
    om = sphere_area(n)
    fields = [f for f, keep in zip(traj.fields, sel) if keep]

    def space_integral(t, u):
        integrand = (n - 1) / m * u**m * eta.laplacian(c, t) + u * eta.time_derivative(c, t)
        return om * float(np.sum(integrand * w))

    lhs_series = [space_integral(t, f.values) for t, f in zip(ts, fields)]
    lhs = float(np.trapezoid(lhs_series, ts))

    gfun = g if callable(g) else (lambda t: g)
    bdry_series = [
        (n - 1) / m * gfun(t) ** m * eta.normal_derivative(t) * om * R ** (n - 1) for t in ts
    ]
    bdry = float(np.trapezoid(bdry_series, ts))

    def weighted_mass(t, u):
        return om * float(np.sum(u * eta.value(c, t) * w))

    rhs = bdry + weighted_mass(t2, fields[-1].values) - weighted_mass(t1, fields[0].values)
    return abs(lhs - rhs)


def positivity_floor(traj: Trajectory, delta: float, t1: float, t2: float) -> float:
    """Infimum of u over the cylinder B_{delta r_max} x [t1, t2] (sampled)."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not t1 <= t2:
        raise ValueError("need t1 <= t2")
    mask = traj.grid.centers <= delta * traj.grid.r_max
    if not np.any(mask):
        raise ValueError("no cells inside the requested sub-ball")
    floor = math.inf
    hit = False
    for t, f in zip(traj.times, traj.fields):
        if t1 - 1e-12 <= t <= t2 + 1e-12:
            hit = True
            floor = min(floor, float(f.values[mask].min()))
    if not hit:
        raise ValueError("no trajectory samples inside [t1, t2]")
    return floor
