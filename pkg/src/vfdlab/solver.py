"""Implicit finite-volume solver for u_t = ((n-1)/m) lap(u^m) in radial symmetry.

One backward-Euler step solves the conservative scheme

    (w_i - u_i)/dt = ((n-1)/m) (1/(r_i^{n-1} dr_i))
                     [ r_{i+1/2}^{n-1} D_{i+1/2} w^m - r_{i-1/2}^{n-1} D_{i-1/2} w^m ],

where D is the two-point difference of w^m between neighboring cell centers,
the flux through the r=0 face is zero (the face area vanishes) and the
boundary face uses a Dirichlet ghost value at r_max.  The nonlinear system is
solved by a damped projected Newton iteration on the tridiagonal Jacobian,
iterating in the flux variable s = w^m (see _implicit_step); since m < 1 the
equation degenerates at w = 0, so iterates are clamped at a tiny positive
floor (or at the eps lift when one is active).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .core import (
    InitialData,
    RadialField,
    RadialGrid,
    StepDiagnostics,
    Trajectory,
    sample_initial,
)

__all__ = [
    "BoundaryCondition",
    "Zero",
    "Constant",
    "TimeVarying",
    "Large",
    "SolverConfig",
    "NewtonDivergence",
    "NonphysicalState",
    "advance",
    "solve",
    "solve_epsilon_family",
    "solve_large_boundary_family",
    "extinction_time",
    "aronson_benilan_violation",
]

_LINEARIZATION_FLOOR = 1e-12  # inside u^{m-1}; keeps the Jacobian bounded at u ~ 0


class NewtonDivergence(RuntimeError):
    """Newton iteration hit its cap; the caller should cut the time step."""


class NonphysicalState(RuntimeError):
    """The step produced values that are not finite real numbers."""


class BoundaryCondition:
    """Dirichlet data at r_max.  Subclasses provide value(t) >= 0."""

    def value(self, t: float) -> float:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class Zero(BoundaryCondition):
    def value(self, t: float) -> float:
        return 0.0

    def describe(self) -> str:
        return "Zero"


@dataclass(frozen=True)
class Constant(BoundaryCondition):
    g: float

    def __post_init__(self):
        if self.g < 0.0 or not math.isfinite(self.g):
            raise ValueError(f"boundary value must be finite and >= 0, got {self.g}")

    def value(self, t: float) -> float:
        return self.g

    def describe(self) -> str:
        return f"Constant(g={self.g:g})"


@dataclass(frozen=True)
class TimeVarying(BoundaryCondition):
    """g(t) sampled from a callable; values must stay >= 0."""

    fn: Callable[[float], float]
    label: str = "TimeVarying"

    def value(self, t: float) -> float:
        g = float(self.fn(t))
        if g < 0.0 or not math.isfinite(g):
            raise ValueError(f"boundary callable returned {g} at t={t}")
        return g

    def describe(self) -> str:
        return self.label


@dataclass(frozen=True)
class Large(BoundaryCondition):
    """Big constant M approximating the infinite-boundary problem."""

    M: float

    def __post_init__(self):
        if not self.M > 0.0:
            raise ValueError(f"M must be positive, got {self.M}")

    def value(self, t: float) -> float:
        return self.M

    def describe(self) -> str:
        return f"Large(M={self.M:g})"


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping and Newton controls.

    eps_floor is the additive lift of the approximation family w_{R,eps}: when
    positive, initial and boundary data are expected at or above it and the
    solution is clamped at eps instead of 0.
    """

    dt_init: float = 1e-4
    dt_max: float = 1e-2
    dt_growth: float = 1.05
    newton_tol: float = 1e-10
    newton_max: int = 30
    eps_floor: float = 0.0
    extinction_threshold: float = 1e-12
    sample_times: Optional[tuple[float, ...]] = None
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.dt_init > 0.0 and self.dt_max > 0.0 and self.dt_growth >= 1.0):
            raise ValueError("time-step controls must be positive, growth >= 1")
        if not (self.newton_tol > 0.0 and self.newton_max >= 1):
            raise ValueError("Newton controls must be positive")
        if self.eps_floor < 0.0:
            raise ValueError("eps_floor must be >= 0")
        if not self.extinction_threshold > 0.0:
            raise ValueError("extinction_threshold must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


class _Geometry:
    """Precomputed grid factors for the implicit step."""

    def __init__(self, grid: RadialGrid, n: int):
        faces, centers = grid.faces, grid.centers
        self.num = centers.size
        self.volumes = centers ** (n - 1) * grid.widths
        areas = faces ** (n - 1)
        # face "conductances": area / distance between the values the flux differs
        inner = np.zeros(self.num + 1)
        if self.num > 1:
            inner[1 : self.num] = areas[1 : self.num] / (centers[1:] - centers[:-1])
        inner[self.num] = areas[-1] / (faces[-1] - centers[-1])
        self.conduct = inner  # index j = face j, conduct[0] = 0 kills the r=0 flux


def _implicit_step(
    u: np.ndarray,
    dt: float,
    g: float,
    geom: _Geometry,
    n: int,
    m: float,
    cfg: SolverConfig,
) -> tuple[np.ndarray, int, float]:
    """One damped-Newton backward-Euler step; returns (w, iterations, final_residual).

    Newton iterates on s = w^m rather than w itself: the fluxes are linear in
    s and the remaining nonlinearity s^{1/m} has a derivative that vanishes at
    vacuum, whereas the primitive-variable mobility m w^{m-1} blows up there
    and wrecks both conditioning and line searches once zero-Dirichlet drains
    create near-vacuum cells.  The clamp makes the discrete problem a
    complementarity system: cells may sit pinned at the floor provided their
    raw residual is nonnegative (the scheme only wants to push them further
    down), so convergence is measured by the projected (KKT) residual, |F| on
    free cells and max(-F, 0) on pinned ones.  The update is backtracked until
    that residual decreases.
    """
    floor = max(cfg.eps_floor, _LINEARIZATION_FLOOR)
    floor_s = floor**m
    inv_m = 1.0 / m
    coef = (n - 1) / m
    ci = coef * dt / geom.volumes
    cond = geom.conduct
    N = geom.num
    gm = g**m

    def residual(s):
        flux = np.empty(N + 1)
        flux[0] = 0.0
        flux[1:N] = cond[1:N] * (s[1:] - s[:-1])
        flux[N] = cond[N] * (gm - s[-1])
        return s**inv_m - u - ci * (flux[1:] - flux[:-1])

    def projected_norm(s, F):
        pinned = s <= floor_s * (1.0 + 1e-12)
        viol = np.where(pinned, np.maximum(-F, 0.0), np.abs(F))
        return float(viol.max())

    upper0 = np.zeros(N)
    lower0 = np.zeros(N)
    if N > 1:  # flux part of the Jacobian is constant in the s variable
        upper0[1:] = -ci[:-1] * cond[1:N]
        lower0[:-1] = -ci[1:] * cond[1:N]
    flux_diag = ci * (cond[1:] + cond[:-1])

    s = np.maximum(u, floor) ** m
    F = residual(s)
    res = projected_norm(s, F)
    for it in range(1, cfg.newton_max + 1):
        if not math.isfinite(res):
            raise NonphysicalState("non-finite residual in Newton iteration")
        if res < cfg.newton_tol:
            return s**inv_m, it - 1, res
        diag = inv_m * s ** (inv_m - 1.0) + flux_diag
        rhs = -F
        # active set: floored cells the scheme pushes further down get frozen
        # (identity rows, zero update), otherwise their phantom updates poison
        # the direction for their free neighbors after the projection
        pinned = (s <= floor_s * (1.0 + 1e-12)) & (F >= 0.0)
        if pinned.any():
            upper, lower, rhs = upper0.copy(), lower0.copy(), rhs.copy()
            diag[pinned] = 1.0
            rhs[pinned] = 0.0
            idx = np.flatnonzero(pinned)
            upper[idx[idx < N - 1] + 1] = 0.0
            lower[idx[idx > 0] - 1] = 0.0
        else:
            upper, lower = upper0, lower0
        delta = solve_banded((1, 1), np.vstack([upper, diag, lower]), rhs)
        step = 1.0
        for _ in range(16):
            s_try = np.maximum(s + step * delta, floor_s)
            F_try = residual(s_try)
            res_try = projected_norm(s_try, F_try)
            if res_try < res or res_try < cfg.newton_tol:
                s, F, res = s_try, F_try, res_try
                break
            step *= 0.5
        else:
            break  # no descent direction left; report divergence
    raise NewtonDivergence(
        f"no convergence in {cfg.newton_max} iterations (residual {res:.3e}, dt {dt:.3e})"
    )


def advance(
    field: RadialField,
    dt: float,
    bc: BoundaryCondition,
    cfg: SolverConfig,
    n: int,
    m: float,
    t: float = 0.0,
) -> RadialField:
    """Advance one backward-Euler step of size dt starting at time t.

    The Dirichlet value is evaluated at the new time level t + dt.  Raises
    NewtonDivergence when the iteration cap is hit (cut dt and retry).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not 0.0 < m < 1.0:
        raise ValueError(f"m must lie in (0,1), got {m}")
    if cfg.eps_floor > 0.0 and field.min() < cfg.eps_floor * (1.0 - 1e-12):
        raise ValueError("field must sit at or above eps_floor under the lift")
    geom = _Geometry(field.grid, n)
    w, _, _ = _implicit_step(field.values, dt, bc.value(t + dt), geom, n, m, cfg)
    return RadialField(field.grid, w)


def solve(
    u0: RadialField,
    bc: BoundaryCondition,
    t_end: float,
    cfg: SolverConfig,
    n: int,
    m: float,
) -> Trajectory:
    """Time-march to t_end with adaptive dt, recording fields at sample times.

    dt halves on NewtonDivergence and grows by cfg.dt_growth after a
    successful step, capped at cfg.dt_max; an unrecoverable divergence is
    raised once dt underflows below 1e-14 * t_end.  The trajectory always
    includes the initial field at t=0.
    """
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    samples = _sample_schedule(cfg.sample_times, t_end)
    geom = _Geometry(u0.grid, n)

    times = [0.0]
    fields = [u0]
    diag_t, diag_dt, diag_it, diag_res, diag_min, diag_max = [], [], [], [], [], []

    u = u0.values.copy()
    t = 0.0
    dt = min(cfg.dt_init, cfg.dt_max)
    target_idx = 0
    while target_idx < len(samples):
        if len(diag_t) >= cfg.max_steps:
            raise NewtonDivergence(
                f"step budget {cfg.max_steps} exhausted at t={t:g} (dt collapsed?)"
            )
        target = samples[target_idx]
        dt_attempt = min(dt, cfg.dt_max, target - t)
        dt_eff = dt_attempt
        while True:
            try:
                w, iters, res = _implicit_step(u, dt_eff, bc.value(t + dt_eff), geom, n, m, cfg)
                break
            except NewtonDivergence:
                dt_eff *= 0.5
                if dt_eff < 1e-14 * t_end:
                    raise
        u = w
        t = target if abs((t + dt_eff) - target) < 1e-13 * max(1.0, target) else t + dt_eff
        diag_t.append(t)
        diag_dt.append(dt_eff)
        diag_it.append(iters)
        diag_res.append(res)
        diag_min.append(float(u.min()))
        diag_max.append(float(u.max()))
        if dt_eff < dt_attempt:  # step was halved, follow it back down
            dt = dt_eff
        dt = min(dt * cfg.dt_growth, cfg.dt_max)
        if t >= target:
            times.append(t)
            fields.append(RadialField(u0.grid, u.copy()))
            target_idx += 1

    diags = StepDiagnostics(
        times=diag_t,
        dts=diag_dt,
        newton_iters=diag_it,
        residuals=diag_res,
        u_min=diag_min,
        u_max=diag_max,
    )
    return Trajectory(
        times=np.array(times),
        fields=tuple(fields),
        boundary=bc.describe(),
        config=cfg,
        m=m,
        diagnostics=diags,
    )


def _sample_schedule(sample_times: Optional[Sequence[float]], t_end: float) -> list[float]:
    if sample_times is None:
        return [t_end]
    out = sorted({float(s) for s in sample_times if 0.0 < s <= t_end * (1.0 + 1e-12)})
    if not out:
        raise ValueError("no sample times fall inside (0, t_end]")
    return out


def solve_epsilon_family(
    data: InitialData,
    grid: RadialGrid,
    eps_list: Sequence[float],
    t_end: float,
    cfg: SolverConfig,
    n: int,
    m: float,
    cut_radius: Optional[float] = None,
) -> list[Trajectory]:
    """Lifted approximations w_{R,eps}: data cut to a sub-ball, raised by eps.

    For each eps the initial data is u0 * chi_{r <= cut} + eps with Constant(eps)
    boundary; cut_radius defaults to 0.4 * r_max.  eps_list must be strictly
    decreasing and positive; the returned trajectories are pointwise monotone
    nonincreasing in eps at matching sample times, up to solver tolerance.
    """
    eps = [float(e) for e in eps_list]
    if not eps or any(e <= 0.0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_list must be strictly decreasing and positive")
    cut = 0.4 * grid.r_max if cut_radius is None else float(cut_radius)
    if not 0.0 < cut < grid.r_max:
        raise ValueError("cut radius must lie strictly inside the domain")
    base = sample_initial(data, grid).values
    base = np.where(grid.centers <= cut, base, 0.0)
    out = []
    for e in eps:
        u0 = RadialField(grid, base + e)
        cfg_e = replace(cfg, eps_floor=e)
        out.append(solve(u0, Constant(e), t_end, cfg_e, n, m))
    return out


def solve_large_boundary_family(
    data: InitialData,
    R_list: Sequence[float],
    M: float,
    t_end: float,
    cfg: SolverConfig,
    n: int,
    m: float,
    delta_r: float,
) -> list[Trajectory]:
    """Approximations u_R of the infinite-boundary problem on growing balls.

    Each R gets a uniform grid with spacing delta_r (grids nest when the R are
    multiples of delta_r) and boundary Large(M), M independent of R.  On a
    fixed compact sub-ball the trajectories decrease as R grows, realizing the
    monotone limit from above.
    """
    Rs = [float(R) for R in R_list]
    if not Rs or any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise ValueError("R_list must be strictly increasing")
    out = []
    for R in Rs:
        num = int(round(R / delta_r))
        if abs(num * delta_r - R) > 1e-9 * R or num < 2:
            raise ValueError(f"R={R} is not a multiple of delta_r={delta_r}")
        grid = RadialGrid.uniform(n, num, R)
        u0 = sample_initial(data, grid)
        out.append(solve(u0, Large(M), t_end, cfg, n, m))
    return out


def extinction_time(traj: Trajectory, threshold: float) -> Optional[float]:
    """First sampled time with max u below the threshold; None if never."""
    if not threshold > 0.0:
        raise ValueError("threshold must be positive")
    for t, f in zip(traj.times, traj.fields):
        if f.max() < threshold:
            return float(t)
    return None


def aronson_benilan_violation(
    traj: Trajectory,
    m: Optional[float] = None,
    interior_fraction: float = 0.9,
    positive_floor: float = 1e-12,
) -> float:
    """Max over interior samples of (1-m) t u_t/u - 1 (u_t by centered time differences).

    Values at or below a small discretization slack mean the one-sided bound
    u_t <= u/((1-m)t) holds on the sampled trajectory.  Cells beyond
    interior_fraction * r_max and values at or below positive_floor are
    excluded.  m defaults to the exponent recorded on the trajectory.
    """
    if m is None:
        m = traj.m
    if m is None:
        raise ValueError("trajectory does not record m; pass it explicitly")
    times = traj.times
    if times.size < 3:
        raise ValueError("need at least 3 samples for centered differences")
    r = traj.grid.centers
    interior = r <= interior_fraction * traj.grid.r_max
    worst = -math.inf
    for i in range(1, times.size - 1):
        if times[i] <= 0.0:
            continue
        dtm = times[i + 1] - times[i - 1]
        ut = (traj.fields[i + 1].values - traj.fields[i - 1].values) / dtm
        u = traj.fields[i].values
        mask = interior & (u > positive_floor)
        if not np.any(mask):
            continue
        excess = (1.0 - m) * times[i] * ut[mask] / u[mask] - 1.0
        worst = max(worst, float(excess.max()))
    if worst == -math.inf:
        raise ValueError("no interior samples with positive values")
    return worst
