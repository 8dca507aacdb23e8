"""Rescaling v(x,t) = t^alpha u(t^beta x, t) and large-time convergence diagnostics.

The rescaled solution of admissible data converges uniformly on compact balls
to the self-similar profile; the study here measures that distance on a fixed
ball over a time window, together with the L1 stability template for pairs of
solutions.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    Composite,
    Exponents,
    InitialData,
    ModelParams,
    PowerLaw,
    RadialField,
    RadialGrid,
    Rescaled,
    Tabulated,
    Trajectory,
    sample_initial,
    compute_exponents,
)
from .exact import sphere_area
from .profile import Profile, ProfileConfig, solve_profile
from .solver import BoundaryCondition, Constant, SolverConfig, solve

__all__ = [
    "ConvergenceReport",
    "L1Report",
    "DomainExceeded",
    "rescale_solution",
    "rescale_initial",
    "compact_sup_distance",
    "convergence_study",
    "l1_difference_check",
]


class DomainExceeded(ValueError):
    """A rescaled radius fell outside the solver domain."""


def rescale_solution(
    traj: Trajectory,
    t: float,
    exps: Exponents,
    target_grid: RadialGrid,
    time_mode: str = "linear",
) -> RadialField:
    """v(r) = t^alpha u(t^beta r, t) sampled on the target grid.

    t must lie in the trajectory's sampled range (fields between samples are
    interpolated linearly in t, or use time_mode="nearest"); the stretched
    radius t^beta * r_max(target) must stay inside the solver domain.
    """
    if t <= 0.0:
        raise ValueError("rescaling needs t > 0")
    stretch = t**exps.beta
    if stretch * target_grid.r_max > traj.grid.r_max * (1.0 + 1e-12):
        raise DomainExceeded(
            f"t^beta * r_max = {stretch * target_grid.r_max:g} exceeds solver domain "
            f"{traj.grid.r_max:g}"
        )
    u = traj.field_at(t, mode=time_mode)
    vals = t**exps.alpha * u.interpolate(stretch * target_grid.centers)
    return RadialField(target_grid, vals)


def rescale_initial(data: InitialData, gamma: float, q: float) -> InitialData:
    """gamma^q data(gamma .), symbolically where the family allows it.

    PowerLaw maps to PowerLaw (A * gamma^{q-q'}, same decay q'), a fixed point
    when q' = q; Composite rescales both parts; Tabulated resamples exactly
    (radii shrink by gamma, values scale by gamma^q).  Anything else is
    wrapped generically.
    """
    if gamma < 1.0:
        raise ValueError("rescaling is used with gamma >= 1")
    if gamma == 1.0:
        return data
    if isinstance(data, PowerLaw):
        return PowerLaw(A=data.A * gamma ** (q - data.q), q=data.q)
    if isinstance(data, Composite):
        return Composite(
            base=rescale_initial(data.base, gamma, q),
            perturbation=rescale_initial(data.perturbation, gamma, q),
        )
    if isinstance(data, Tabulated):
        return Tabulated(radii=data.radii / gamma, table=gamma**q * data.table)
    if isinstance(data, Rescaled):
        return Rescaled(base=data.base, gamma=data.gamma * gamma, q=q)
    return Rescaled(base=data, gamma=gamma, q=q)


def compact_sup_distance(
    a: RadialField,
    b: Union[RadialField, Profile, Callable],
    R: float,
    num_samples: int = 512,
) -> float:
    """Sup of |a - b| over a dense sample of [0, R]."""
    if R <= 0.0:
        raise ValueError("R must be positive")
    if R > a.grid.r_max * (1.0 + 1e-12):
        raise ValueError(f"R={R:g} exceeds the first field's domain {a.grid.r_max:g}")
    r = np.linspace(0.0, R, num_samples)
    fa = a.interpolate(r)
    if isinstance(b, RadialField):
        if R > b.grid.r_max * (1.0 + 1e-12):
            raise ValueError(f"R={R:g} exceeds the second field's domain {b.grid.r_max:g}")
        fb = b.interpolate(r)
    elif isinstance(b, Profile):
        fb = b.interpolate(r)
    else:
        fb = np.asarray(b(r), dtype=float)
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True)
class ConvergenceReport:
    """Distance d(t) = sup_{|x| <= R} |v(., t) - profile| over the requested times."""

    times: np.ndarray
    distances: np.ndarray
    R: float
    profile_lam: float
    monotone_tail_ratio: float
    tail_start: float

    def tail_nonincreasing(self, noise: float = 0.2) -> bool:
        """True when the tail-window distances never rise by more than the noise fraction."""
        mask = self.times >= self.tail_start
        d = self.distances[mask]
        return bool(np.all(d[1:] <= d[:-1] * (1.0 + noise)))


def _far_field_amplitude_of(data: InitialData) -> Optional[float]:
    if isinstance(data, PowerLaw):
        return data.A
    if isinstance(data, Composite):
        return _far_field_amplitude_of(data.base)
    return None


def convergence_study(
    data: InitialData,
    params: ModelParams,
    times: Sequence[float],
    R: float,
    solver_cfg: SolverConfig,
    profile: Optional[Profile] = None,
    grid: Optional[RadialGrid] = None,
    bc: Optional[BoundaryCondition] = None,
    domain_factor: float = 1.5,
    tail_fraction: float = 0.1,
) -> ConvergenceReport:
    """Run the solver and measure d(t) = sup_{B_R} |rescaled solution - profile|.

    The domain is sized so t^beta * R stays interior for the largest requested
    time (factor ``domain_factor``); the default boundary feed is the constant
    far-field trace A r_max^{-q} of the data's power-law part.  The tail
    window is [tail_fraction * t_max, t_max]; its first/last distance ratio is
    the reported decay.
    """
    times = np.sort(np.asarray(list(times), dtype=float))
    if times.size < 2 or times[0] <= 0.0:
        raise ValueError("need at least two positive sample times")
    exps = compute_exponents(params.q, params.m)
    t_max = float(times[-1])
    r_needed = t_max**exps.beta * R * domain_factor

    if grid is None:
        grid = RadialGrid.stretched(params.n, 640, r_needed, ratio=12.0)
    elif grid.r_max < t_max**exps.beta * R * (1.0 - 1e-12):
        raise DomainExceeded(
            f"grid r_max {grid.r_max:g} cannot contain t_max^beta * R = "
            f"{t_max**exps.beta * R:g}"
        )
    if bc is None:
        A_far = _far_field_amplitude_of(data)
        if A_far is None:
            raise ValueError("cannot infer a far-field boundary value; pass bc explicitly")
        bc = Constant(A_far * grid.r_max ** (-params.q))
    if profile is None:
        A_far = _far_field_amplitude_of(data)
        if A_far is None:
            raise ValueError("no profile given and no power-law part to build one from")
        profile = solve_profile(A_far, params, ProfileConfig())

    cfg = dataclasses.replace(solver_cfg, sample_times=tuple(times))
    u0 = sample_initial(data, grid)
    traj = solve(u0, bc, t_max, cfg, params.n, params.m)

    target = RadialGrid.uniform(params.n, 400, R)
    dists = np.array(
        [
            compact_sup_distance(rescale_solution(traj, t, exps, target), profile, R)
            for t in times
        ]
    )
    tail_start = tail_fraction * t_max
    tail = dists[times >= tail_start]
    ratio = float(tail[-1] / tail[0]) if tail.size >= 2 and tail[0] > 0.0 else math.nan
    return ConvergenceReport(
        times=times,
        distances=dists,
        R=R,
        profile_lam=profile.lam,
        monotone_tail_ratio=ratio,
        tail_start=tail_start,
    )


@dataclass(frozen=True)
class L1Report:
    """Measured D(t) = int_{B_R1} |u_a - u_b| dx and its power-template fit.

    The template is D(t)^{1-m} - D(0+)^{1-m} ~ slope * t with 0+ the first
    sample; fit_residual is the relative rms misfit of the through-origin
    linear fit, and the fitted slope is the empirical stability constant.
    """

    times: np.ndarray
    values: np.ndarray
    R1: float
    slope: float
    fit_residual: float


def l1_difference_check(
    data_a: InitialData,
    data_b: InitialData,
    params: ModelParams,
    times: Sequence[float],
    R1: float,
    solver_cfg: SolverConfig,
    grid: Optional[RadialGrid] = None,
    bc_a: Optional[BoundaryCondition] = None,
    bc_b: Optional[BoundaryCondition] = None,
) -> L1Report:
    """Solve both data sets on a common grid and fit the L1 difference template."""
    times = np.sort(np.asarray(list(times), dtype=float))
    if times.size < 3 or times[0] <= 0.0:
        raise ValueError("need at least three positive sample times")
    if grid is None:
        grid = RadialGrid.uniform(params.n, int(round(4.0 * R1 / 0.015625)), 4.0 * R1)
    if grid.r_max < 2.0 * R1:
        raise ValueError("common domain must cover at least 2 * R1")

    m = params.m
    cfg = dataclasses.replace(solver_cfg, sample_times=tuple(times))

    def run(data, bc):
        u0 = sample_initial(data, grid)
        if bc is None:
            bc = Constant(float(u0.values[-1]))
        return solve(u0, bc, float(times[-1]), cfg, params.n, params.m)

    ta = run(data_a, bc_a)
    tb = run(data_b, bc_b)

    w = grid.cell_volumes
    mask = grid.centers <= R1
    om = sphere_area(params.n)
    D = np.array(
        [
            om * float(np.sum(np.abs(fa.values - fb.values)[mask] * w[mask]))
            for fa, fb in zip(ta.fields[1:], tb.fields[1:])  # skip the t=0 snapshot
        ]
    )
    y = D ** (1.0 - m) - D[0] ** (1.0 - m)
    tt = times - times[0]
    denom = float(np.sum(tt * tt))
    slope = float(np.sum(y * tt) / denom) if denom > 0.0 else 0.0
    scale = float(np.sqrt(np.mean(y**2)))
    resid = float(np.sqrt(np.mean((y - slope * tt) ** 2)) / scale) if scale > 0.0 else 0.0
    return L1Report(times=times, values=D, R1=R1, slope=slope, fit_residual=resid)
