import numpy as np
import pytest

from vfdlab import (
    BarenblattSlice,
    BarenblattSpec,
    ModelParams,
    ProfileConfig,
    RadialGrid,
    SolverConfig,
    TimeVarying,
    barenblatt,
    sample_initial,
    solve,
    solve_profile,
)

N_CANON, M_CANON, Q_CANON, A_CANON = 3, 0.2, 1.0, 1.0


@pytest.fixture(scope="session")
def params():
    return ModelParams(n=N_CANON, m=M_CANON, p=2.0, q=Q_CANON, A=A_CANON)


@pytest.fixture(scope="session")
def spec():
    return BarenblattSpec(k=1.0, T=1.0)


@pytest.fixture(scope="session")
def canonical_profile(params):
    """Profile for A=1 on the default far grid; shared, it is the expensive fixture."""
    return solve_profile(1.0, params, ProfileConfig())


def exact_boundary(spec, r_max, n=N_CANON, m=M_CANON):
    return TimeVarying(lambda t: float(barenblatt(r_max, t, spec, n, m)), label="exact-trace")


def oracle_trajectory(spec, num_cells, r_max, t_end, dt_scale=8.0, samples=None):
    """Barenblatt-data run with the exact time-varying boundary trace.

    dt is tied to the grid (dt = dt_scale * dr^2) so that joint refinement
    reduces both error components together.
    """
    grid = RadialGrid.uniform(N_CANON, num_cells, r_max)
    dr = r_max / num_cells
    dt = dt_scale * dr**2
    cfg = SolverConfig(
        dt_init=dt,
        dt_max=dt,
        dt_growth=1.0,
        newton_tol=1e-11,
        sample_times=samples or tuple(np.linspace(0.0, t_end, 10)[1:]),
    )
    u0 = sample_initial(BarenblattSlice(spec, m=M_CANON, n=N_CANON), grid)
    return solve(u0, exact_boundary(spec, r_max), t_end, cfg, N_CANON, M_CANON)


@pytest.fixture(scope="session")
def oracle_run_800(spec):
    return oracle_trajectory(spec, 800, 4.0, 0.9, dt_scale=8.0)


def rel_linf_error(traj, spec, n=N_CANON, m=M_CANON):
    """Max over samples of the L-inf error against the exact solution, relative to max u0."""
    scale = traj.fields[0].max()
    worst = 0.0
    for t, f in zip(traj.times, traj.fields):
        exact = np.asarray(barenblatt(f.grid.centers, t, spec, n, m))
        worst = max(worst, float(np.max(np.abs(f.values - exact))) / scale)
    return worst
