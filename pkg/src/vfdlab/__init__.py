"""Desk-scale numerical laboratory for the very fast diffusion equation

    u_t = ((n-1)/m) lap(u^m),   n >= 3,  0 < m <= (n-2)/n.

Implicit radial finite-volume solver, exact Barenblatt oracles, growth-average
existence criteria, self-similar profiles by shooting, and large-time
rescaling diagnostics.
"""
from .core import (
    BarenblattSlice,
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
    compute_exponents,
    gaussian_bump,
    interpolate,
    sample_initial,
    validate_params,
)
from .exact import (
    BarenblattSpec,
    barenblatt,
    barenblatt_growth_limit,
    barenblatt_pde_residual,
    comparison_constants,
    cstar,
    sphere_area,
)
from .solver import (
    Constant,
    Large,
    NewtonDivergence,
    NonphysicalState,
    SolverConfig,
    TimeVarying,
    Zero,
    advance,
    aronson_benilan_violation,
    extinction_time,
    solve,
    solve_epsilon_family,
    solve_large_boundary_family,
)
from .profile import (
    NoBracket,
    NonMonotoneAmplitudeMap,
    Profile,
    ProfileConfig,
    SandwichReport,
    far_field_amplitude,
    ode_residual,
    psi,
    sandwich_check,
    shoot,
    solve_profile,
)
from .asymptotics import (
    ConvergenceReport,
    DomainExceeded,
    L1Report,
    compact_sup_distance,
    convergence_study,
    l1_difference_check,
    rescale_initial,
    rescale_solution,
)
from .criteria import (
    GrowthReport,
    TestFunction,
    adaptive_simpson,
    extinction_lower_bound,
    growth_average,
    growth_criterion_report,
    positivity_floor,
    weak_form_residual,
)

__version__ = "0.1.0"
