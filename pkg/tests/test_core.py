import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vfdlab import (
    BarenblattSlice,
    BarenblattSpec,
    Composite,
    ModelParams,
    PowerLaw,
    RadialField,
    RadialGrid,
    Tabulated,
    Trajectory,
    compute_exponents,
    gaussian_bump,
    interpolate,
    sample_initial,
    sphere_area,
    validate_params,
)


class TestExponents:
    def test_canonical(self):
        e = compute_exponents(1.0, 0.2)
        assert e.alpha == pytest.approx(5.0 / 6.0, abs=1e-15)
        assert e.beta == pytest.approx(5.0 / 6.0, abs=1e-15)

    def test_zero_decay(self):
        e = compute_exponents(0.0, 0.2)
        assert e.alpha == 0.0
        assert e.beta == 0.5

    def test_steeper_decay(self):
        e = compute_exponents(2.0, 0.2)
        assert e.beta == pytest.approx(2.5, rel=1e-15)
        assert e.alpha == pytest.approx(5.0, rel=1e-15)

    def test_rejects_critical_decay(self):
        with pytest.raises(ValueError):
            compute_exponents(2.5, 0.2)
        with pytest.raises(ValueError):
            compute_exponents(3.0, 0.2)

    @settings(max_examples=300, deadline=None)
    @given(
        q=st.floats(min_value=0.0, max_value=10.0, exclude_max=True),
        m=st.floats(min_value=1e-6, max_value=1.0, exclude_max=True),
    )
    def test_identities(self, q, m):
        if q >= 2.0 / (1.0 - m) * (1.0 - 1e-12):
            return
        e = compute_exponents(q, m)
        assert e.alpha == q * e.beta  # exact, alpha is defined through beta
        assert abs(1.0 / e.beta - (2.0 - q * (1.0 - m))) < 1e-12
        assert e.beta > 0.0


class TestValidateParams:
    def test_canonical_valid(self):
        p = ModelParams(n=3, m=0.2, p=2.0, q=1.0, A=1.0)
        assert validate_params(p) == []
        assert validate_params(p, asymptotics=True) == []

    def test_m_above_range(self):
        bad = validate_params(ModelParams(n=3, m=0.5, p=2.0, q=1.0, A=1.0))
        assert len(bad) == 1 and "(n-2)/n" in bad[0]

    def test_integrability_violation(self):
        # max(1, 0.8*3/2) = 1.2 > 1.1
        bad = validate_params(ModelParams(n=3, m=0.2, p=1.1, q=1.0, A=1.0))
        assert len(bad) == 1 and "p >" in bad[0]

    def test_asymptotics_needs_strict_m(self):
        p = ModelParams(n=3, m=1.0 / 3.0, p=2.0, q=1.0, A=1.0)
        assert validate_params(p) == []
        assert any("asymptotics" in v for v in validate_params(p, asymptotics=True))

    def test_q_window(self):
        p = ModelParams(n=3, m=0.2, p=2.0, q=1.6, A=1.0)  # n/p = 1.5
        assert any("q < n/p" in v for v in validate_params(p, asymptotics=True))
        assert validate_params(p) == []

    def test_pure_predicate(self):
        p = ModelParams(n=3, m=0.4, p=1.0, q=-1.0, A=0.0)
        assert validate_params(p, True) == validate_params(p, True)

    def test_nonfinite_reported(self):
        p = ModelParams(n=3, m=float("nan"), p=2.0)
        assert any("non-finite" in v for v in validate_params(p))


class TestRadialGrid:
    def test_uniform_structure(self):
        g = RadialGrid.uniform(3, 8, 4.0)
        assert g.faces[0] == 0.0 and g.r_max == 4.0
        assert np.all(np.diff(g.faces) > 0)
        assert np.all(g.centers > g.faces[:-1]) and np.all(g.centers < g.faces[1:])

    def test_stretched_ratio(self):
        g = RadialGrid.stretched(3, 50, 10.0, ratio=8.0)
        w = g.widths
        assert w[-1] / w[0] == pytest.approx(8.0, rel=1e-9)
        assert g.faces[-1] == 10.0

    def test_rejects_bad_faces(self):
        with pytest.raises(ValueError):
            RadialGrid(3, [0.5, 1.0])
        with pytest.raises(ValueError):
            RadialGrid(3, [0.0, 1.0, 1.0])

    def test_immutable(self):
        g = RadialGrid.uniform(3, 4, 1.0)
        with pytest.raises(AttributeError):
            g.n = 4
        with pytest.raises(ValueError):
            g.faces[0] = 1.0


class TestSampling:
    def test_powerlaw_pointwise(self):
        g = RadialGrid.uniform(3, 4, 2.0)  # centers 0.25, 0.75, 1.25, 1.75
        f = sample_initial(PowerLaw(A=1.0, q=1.0), g)
        assert f.interpolate(0.75) == pytest.approx(1.0 / 0.75, rel=1e-14)

    def test_powerlaw_cap_default_first_center(self):
        g = RadialGrid.uniform(3, 100, 4.0)
        f = sample_initial(PowerLaw(A=1.0, q=1.0), g)
        assert f.values[0] == pytest.approx(1.0 / g.centers[0])
        assert f.values[0] == f.max()

    def test_powerlaw_explicit_cap(self):
        g = RadialGrid.uniform(3, 100, 4.0)
        f = sample_initial(PowerLaw(A=1.0, q=1.0), g, cap=10.0)
        assert f.max() == 10.0

    def test_powerlaw_nonincreasing(self):
        rng = np.random.default_rng(7)
        g = RadialGrid.uniform(3, 64, 5.0)
        for _ in range(20):
            q = rng.uniform(0.1, 2.4)
            f = sample_initial(PowerLaw(A=rng.uniform(0.5, 2.0), q=q), g)
            assert np.all(np.diff(f.values) <= 0.0)

    def test_barenblatt_slice(self):
        g = RadialGrid(3, [0.0, 2.0])  # single cell centered at r=1
        spec = BarenblattSpec(k=1.0, T=1.0)
        f = sample_initial(BarenblattSlice(spec, m=0.2, n=3), g)
        assert f.values[0] == pytest.approx(1.0, rel=1e-14)

    def test_composite_zero_perturbation(self):
        g = RadialGrid.uniform(3, 32, 4.0)
        zero = Tabulated(np.array([0.0, 4.0]), np.array([0.0, 0.0]))
        a = sample_initial(PowerLaw(A=1.0, q=1.0), g)
        b = sample_initial(Composite(PowerLaw(A=1.0, q=1.0), zero), g)
        assert np.array_equal(a.values, b.values)

    def test_composite_negative_rejected(self):
        g = RadialGrid.uniform(3, 32, 4.0)
        neg = Tabulated(np.array([0.0, 4.0]), np.array([-5.0, -5.0]))
        with pytest.raises(ValueError, match="negative"):
            sample_initial(Composite(PowerLaw(A=1.0, q=1.0), neg), g)

    def test_gaussian_bump_mass(self):
        bump = gaussian_bump(3, mass=1.0, sigma=0.5)
        assert bump.l1_norm(3) == pytest.approx(1.0, rel=1e-6)


class TestInterpolation:
    def test_node_exactness(self):
        g = RadialGrid.uniform(3, 16, 4.0)
        vals = np.linspace(2.0, 0.5, 16)
        f = RadialField(g, vals)
        assert np.allclose(f.interpolate(g.centers), vals, rtol=0, atol=0)

    def test_midpoint_mean(self):
        g = RadialGrid.uniform(3, 4, 4.0)
        f = RadialField(g, np.array([4.0, 2.0, 1.0, 0.5]))
        mid = 0.5 * (g.centers[1] + g.centers[2])
        assert f.interpolate(mid) == pytest.approx(1.5)

    def test_monotone_bracket(self):
        g = RadialGrid.uniform(3, 64, 4.0)
        f = sample_initial(PowerLaw(A=1.0, q=1.0), g)
        r = 1.2345
        i = np.searchsorted(g.centers, r)
        lo, hi = f.values[i], f.values[i - 1]
        assert lo <= f.interpolate(r) <= hi

    def test_outside_domain_rejected(self):
        g = RadialGrid.uniform(3, 8, 2.0)
        f = RadialField(g, np.ones(8))
        with pytest.raises(ValueError):
            f.interpolate(2.5)
        with pytest.raises(ValueError):
            interpolate(f, -0.1)

    def test_field_requires_nonnegative(self):
        g = RadialGrid.uniform(3, 4, 1.0)
        with pytest.raises(ValueError):
            RadialField(g, np.array([1.0, -0.1, 0.0, 0.0]))


class TestTrajectory:
    def _traj(self):
        g = RadialGrid.uniform(3, 4, 1.0)
        fields = tuple(RadialField(g, np.full(4, v)) for v in (2.0, 1.0, 0.5))
        return Trajectory(times=np.array([0.0, 1.0, 2.0]), fields=fields, boundary="Zero",
                          config=None, m=0.2)

    def test_strictly_increasing_required(self):
        g = RadialGrid.uniform(3, 4, 1.0)
        f = RadialField(g, np.ones(4))
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 0.0]), fields=(f, f), boundary="Zero", config=None)

    def test_field_at_modes(self):
        tr = self._traj()
        assert tr.field_at(1.0).values[0] == 1.0
        assert tr.field_at(0.6, mode="nearest").values[0] == 1.0
        assert tr.field_at(0.5, mode="linear").values[0] == pytest.approx(1.5)
        with pytest.raises(ValueError):
            tr.field_at(3.0)

    def test_mass_of_constant_field(self):
        g = RadialGrid.uniform(3, 100, 2.0)
        f = RadialField(g, np.ones(100))
        # r_c^2 dr midpoint rule vs exact ball volume 4pi R^3/3
        assert f.mass() == pytest.approx(4.0 * np.pi * 8.0 / 3.0, rel=1e-4)
        assert sphere_area(3) == pytest.approx(4.0 * np.pi, rel=1e-15)
