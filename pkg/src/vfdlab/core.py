"""Parameters, radial grids, fields, initial-data families and trajectories.

Shared vocabulary for the whole laboratory.  Everything is immutable after
construction (arrays are marked read-only), so instances can be shared freely
across concurrent work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exact import BarenblattSpec, barenblatt, sphere_area

__all__ = [
    "ModelParams",
    "Exponents",
    "RadialGrid",
    "RadialField",
    "InitialData",
    "PowerLaw",
    "BarenblattSlice",
    "Tabulated",
    "Composite",
    "Rescaled",
    "Trajectory",
    "StepDiagnostics",
    "validate_params",
    "compute_exponents",
    "sample_initial",
    "interpolate",
    "gaussian_bump",
]


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Model tuple (n, m, p, q, A).

    n is the spatial dimension, m the diffusion exponent, p the local
    integrability exponent of the initial data, and (q, A) describe the
    far-field decay A|x|^{-q} used by the asymptotics.
    """

    n: int
    m: float
    p: float
    q: float = 0.0
    A: float = 1.0

    @property
    def very_fast_bound(self) -> float:
        """(n-2)/n, the upper edge of the very fast diffusion range for m."""
        return (self.n - 2) / self.n


def validate_params(params: ModelParams, asymptotics: bool = False) -> list[str]:
    """Return every violated admissibility constraint (empty list means valid).

    Violations are data, not failures; each entry names the constraint and the
    offending values.  With ``asymptotics`` the stricter hypotheses of the
    large-time theory are checked as well (m strictly below (n-2)/n,
    0 < q < n/p and A > 0).
    """
    v: list[str] = []
    fields = {"m": params.m, "p": params.p, "q": params.q, "A": params.A}
    bad = [k for k, x in fields.items() if not math.isfinite(x)]
    if bad:
        return [f"non-finite fields: {', '.join(bad)}"]

    if params.n < 3:
        v.append(f"n >= 3 required, got n={params.n}")
        return v  # remaining constraints are meaningless below n=3

    edge = params.very_fast_bound
    if not params.m > 0.0:
        v.append(f"m > 0 required, got m={params.m}")
    elif asymptotics:
        if not params.m < edge:
            v.append(f"m < (n-2)/n = {edge:.6g} required for asymptotics, got m={params.m}")
    elif not params.m <= edge:
        v.append(f"m <= (n-2)/n = {edge:.6g} required, got m={params.m}")

    p_floor = max(1.0, (1.0 - params.m) * params.n / 2.0)
    if not params.p > p_floor:
        v.append(f"p > max(1, (1-m)n/2) = {p_floor:.6g} required, got p={params.p}")

    if asymptotics:
        if not params.q > 0.0:
            v.append(f"q > 0 required for asymptotics, got q={params.q}")
        elif params.p > 0 and not params.q < params.n / params.p:
            v.append(f"q < n/p = {params.n / params.p:.6g} required, got q={params.q}")
        if not params.A > 0.0:
            v.append(f"A > 0 required for asymptotics, got A={params.A}")
    return v


@dataclass(frozen=True)
class Exponents:
    """Similarity exponents: beta = 1/(2 - q(1-m)), alpha = q*beta."""

    alpha: float
    beta: float

    @property
    def q(self) -> float:
        return self.alpha / self.beta


def compute_exponents(q: float, m: float) -> Exponents:
    """Exponents of the rescaling v(x,t) = t^alpha u(t^beta x, t).

    Rejects q >= 2/(1-m), where the defining denominator 2 - q(1-m) is not
    positive.
    """
    denom = 2.0 - q * (1.0 - m)
    if denom <= 0.0:
        raise ValueError(f"need q < 2/(1-m) = {2.0 / (1.0 - m):.6g}, got q={q}")
    beta = 1.0 / denom
    return Exponents(alpha=q * beta, beta=beta)


class RadialGrid:
    """Finite-volume grid on [0, r_max]: N cells bounded by N+1 faces.

    Cell centers are face midpoints; face_radii[0] must be 0.  The cell
    "volume" weight is r_c^{n-1} * dr, the weight the solver's conservative
    scheme telescopes against.
    """

    __slots__ = ("n", "faces", "centers", "widths")

    def __init__(self, n: int, faces: Sequence[float]):
        faces = _frozen_array(faces)
        if n < 1:
            raise ValueError(f"dimension must be >= 1, got {n}")
        if faces.ndim != 1 or faces.size < 2:
            raise ValueError("need at least two face radii")
        if faces[0] != 0.0:
            raise ValueError(f"first face must sit at r=0, got {faces[0]}")
        if not np.all(np.diff(faces) > 0.0):
            raise ValueError("face radii must be strictly increasing")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "centers", _frozen_array(0.5 * (faces[:-1] + faces[1:])))
        object.__setattr__(self, "widths", _frozen_array(np.diff(faces)))

    def __setattr__(self, *a):  # immutable
        raise AttributeError("RadialGrid is immutable")

    @property
    def num_cells(self) -> int:
        return self.centers.size

    @property
    def r_max(self) -> float:
        return float(self.faces[-1])

    @property
    def cell_volumes(self) -> np.ndarray:
        """r_c^{n-1} * dr per cell (no angular factor)."""
        return self.centers ** (self.n - 1) * self.widths

    @classmethod
    def uniform(cls, n: int, num_cells: int, r_max: float) -> "RadialGrid":
        if num_cells < 1 or r_max <= 0.0:
            raise ValueError("need num_cells >= 1 and r_max > 0")
        return cls(n, np.linspace(0.0, r_max, num_cells + 1))

    @classmethod
    def stretched(cls, n: int, num_cells: int, r_max: float, ratio: float) -> "RadialGrid":
        """Geometrically stretched cells; ratio = (last width)/(first width)."""
        if num_cells < 2 or r_max <= 0.0 or ratio <= 0.0:
            raise ValueError("need num_cells >= 2, r_max > 0, ratio > 0")
        g = ratio ** (1.0 / (num_cells - 1))
        widths = g ** np.arange(num_cells)
        widths *= r_max / widths.sum()
        faces = np.concatenate([[0.0], np.cumsum(widths)])
        faces[-1] = r_max
        return cls(n, faces)

    def __eq__(self, other):
        return (
            isinstance(other, RadialGrid)
            and self.n == other.n
            and np.array_equal(self.faces, other.faces)
        )

    def __repr__(self):
        return f"RadialGrid(n={self.n}, N={self.num_cells}, r_max={self.r_max:g})"


@dataclass(frozen=True)
class RadialField:
    """Nonnegative cell-center values on a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen_array(self.values)
        if vals.shape != self.grid.centers.shape:
            raise ValueError(
                f"values shape {vals.shape} does not match grid with {self.grid.num_cells} cells"
            )
        if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite and nonnegative")
        object.__setattr__(self, "values", vals)

    def interpolate(self, r):
        """Piecewise-linear interpolation of cell-center values, clamped at >= 0.

        Exact at cell centers, constant beyond the first/last center, defined
        on [0, r_max] only.
        """
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > self.grid.r_max * (1.0 + 1e-12)):
            raise ValueError(f"radius outside [0, {self.grid.r_max:g}]")
        out = np.maximum(np.interp(r, self.grid.centers, self.values), 0.0)
        return float(out) if out.ndim == 0 else out

    def mass(self) -> float:
        """Discrete integral of u over the ball, omega_n * sum(u r^{n-1} dr)."""
        return float(sphere_area(self.grid.n) * np.sum(self.values * self.grid.cell_volumes))

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


def interpolate(field: RadialField, r):
    """Module-level alias for RadialField.interpolate."""
    return field.interpolate(r)


class InitialData:
    """Base class for symbolic initial-data families.

    Subclasses implement ``evaluate(r)``, the ideal pointwise data (which may
    be singular at r=0 for decaying power laws); ``sample_initial`` turns that
    into a finite grid field.
    """

    def evaluate(self, r) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(InitialData):
    """A * r^{-q} with A > 0 and q >= 0."""

    A: float
    q: float

    def __post_init__(self):
        if not self.A > 0.0:
            raise ValueError(f"A must be positive, got {self.A}")
        if self.q < 0.0:
            raise ValueError(f"q must be nonnegative, got {self.q}")

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        if self.q == 0.0:
            return np.full_like(r, self.A)
        with np.errstate(divide="ignore"):
            return self.A * r ** (-self.q)


@dataclass(frozen=True)
class BarenblattSlice(InitialData):
    """B_k(., t0) for a given spec, diffusion exponent m and dimension n."""

    spec: BarenblattSpec
    m: float
    t0: float = 0.0
    n: int = 3

    def evaluate(self, r):
        return np.asarray(barenblatt(r, self.t0, self.spec, self.n, self.m), dtype=float)


@dataclass(frozen=True)
class Tabulated(InitialData):
    """Piecewise-linear table of (radius, value) pairs.

    Values may be signed so a table can serve as the perturbation of a
    Composite; standalone sampling still has to produce a nonnegative field.
    Beyond the last tabulated radius the value is 0; below the first it is
    held constant.
    """

    radii: np.ndarray
    table: np.ndarray

    def __post_init__(self):
        r = _frozen_array(self.radii)
        v = _frozen_array(self.table)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ValueError("radii and table must be matching 1-d arrays, length >= 2")
        if not np.all(np.diff(r) > 0.0) or r[0] < 0.0:
            raise ValueError("radii must be nonnegative and strictly increasing")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "table", v)

    @classmethod
    def from_field(cls, field: RadialField) -> "Tabulated":
        return cls(field.grid.centers, field.values)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return np.interp(r, self.radii, self.table, right=0.0)

    def l1_norm(self, n: int) -> float:
        """omega_n * int |phi| r^{n-1} dr over the tabulated range (trapezoid)."""
        integrand = np.abs(self.table) * self.radii ** (n - 1)
        return float(sphere_area(n) * np.trapezoid(integrand, self.radii))


@dataclass(frozen=True)
class Composite(InitialData):
    """base + perturbation; the perturbation may be signed, the sum may not."""

    base: InitialData
    perturbation: InitialData

    def evaluate(self, r):
        return self.base.evaluate(r) + self.perturbation.evaluate(r)


@dataclass(frozen=True)
class Rescaled(InitialData):
    """gamma^q * data(gamma r), the initial-data action of the scaling group."""

    base: InitialData
    gamma: float
    q: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        return self.gamma**self.q * self.base.evaluate(self.gamma * r)


def sample_initial(
    data: InitialData, grid: RadialGrid, cap: Optional[float] = None
) -> RadialField:
    """Evaluate initial data at cell centers as a finite nonnegative field.

    A PowerLaw with q > 0 is capped at ``cap`` (default: its value at the
    first cell center) so the sampled field stays finite; the cap is applied
    to the power-law part of a Composite as well.  A Composite whose sampled
    sum dips negative is rejected.
    """
    c = grid.centers
    vals = _sample(data, c, cap)
    if np.any(vals < 0.0):
        raise ValueError("sampled initial data is negative somewhere")
    return RadialField(grid, vals)


def _sample(data: InitialData, c: np.ndarray, cap: Optional[float]) -> np.ndarray:
    if isinstance(data, PowerLaw):
        vals = data.evaluate(c)
        if data.q > 0.0:
            vals = np.minimum(vals, cap if cap is not None else data.A * c[0] ** (-data.q))
        return vals
    if isinstance(data, Composite):
        return _sample(data.base, c, cap) + _sample(data.perturbation, c, cap)
    if isinstance(data, Rescaled):
        inner = _sample(data.base, data.gamma * c, cap)
        return data.gamma**data.q * inner
    return np.asarray(data.evaluate(c), dtype=float)


def gaussian_bump(
    n: int,
    mass: float = 1.0,
    sigma: float = 0.5,
    center: float = 0.0,
    r_max: Optional[float] = None,
    num: int = 4000,
) -> Tabulated:
    """Tabulated radial Gaussian exp(-(r-center)^2/(2 sigma^2)), normalized to the given mass."""
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    r_max = r_max if r_max is not None else center + 10.0 * sigma
    r = np.linspace(0.0, r_max, num)
    prof = np.exp(-((r - center) ** 2) / (2.0 * sigma**2))
    raw = sphere_area(n) * np.trapezoid(prof * r ** (n - 1), r)
    return Tabulated(r, mass * prof / raw)


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step solver records: time reached, dt, Newton iterations, residual, field range."""

    times: np.ndarray
    dts: np.ndarray
    newton_iters: np.ndarray
    residuals: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray

    def __post_init__(self):
        for name in ("times", "dts", "newton_iters", "residuals", "u_min", "u_max"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))

    @property
    def num_steps(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered field samples with the configuration that produced them.

    m is the diffusion exponent of the run (the dimension lives on the grid),
    recorded so that diagnostics can be computed from the trajectory alone.
    """

    times: np.ndarray
    fields: tuple[RadialField, ...]
    boundary: str
    config: object
    m: Optional[float] = None
    diagnostics: Optional[StepDiagnostics] = None

    def __post_init__(self):
        t = _frozen_array(self.times)
        if t.ndim != 1 or t.size != len(self.fields):
            raise ValueError("times and fields must have matching lengths")
        if t.size and not np.all(np.diff(t) > 0.0):
            raise ValueError("sample times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "fields", tuple(self.fields))

    @property
    def grid(self) -> RadialGrid:
        return self.fields[0].grid

    def field_at(self, t: float, mode: str = "nearest") -> RadialField:
        """Field at time t: the nearest sample, or linear-in-t interpolation."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise ValueError(f"t={t:g} outside sampled range [{times[0]:g}, {times[-1]:g}]")
        i = int(np.searchsorted(times, t))
        i = min(max(i, 0), times.size - 1)
        if abs(times[i] - t) < 1e-12 or mode == "nearest":
            j = int(np.argmin(np.abs(times - t)))
            return self.fields[j]
        if mode != "linear":
            raise ValueError(f"unknown interpolation mode {mode!r}")
        lo = max(i - 1, 0)
        w = (t - times[lo]) / (times[i] - times[lo])
        vals = (1.0 - w) * self.fields[lo].values + w * self.fields[i].values
        return RadialField(self.grid, vals)

    def max_values(self) -> np.ndarray:
        return np.array([f.max() for f in self.fields])

    def masses(self) -> np.ndarray:
        return np.array([f.mass() for f in self.fields])
