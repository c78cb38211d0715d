import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eddi.basis import BasisLibrary, parse_terms
from eddi.damping import kinetic_energy
from eddi.dynamics import SolverSpec, integrate_rk45
from eddi.errors import AllMasked, DataError
from eddi.identify import identify_eddi
from eddi.models import DampingModel, IdentifiedSystem, Response, StiffnessModel
from eddi.stiffness import (
    SCHEMES,
    ConservativeForceSamples,
    conservative_force,
    fit_stiffness,
    identify_stiffness,
    lagrangian,
    secant_mean,
)
from eddi.series import TimeSeries

from conftest import linear_system, sampled

DAMPING = "qd, qd^2, qd^3, q^2*qd"
DEG5 = BasisLibrary.polynomial(5)


def exact_phase_two(r, sys, lib, **kw):
    """Phase two fed with the exact mechanical energy."""
    T = kinetic_energy(r)
    return identify_stiffness(r, T, sys.mechanical_energy(r), lib, smooth_window=1, **kw)


@pytest.fixture(scope="module")
def duffing_eddi(duffing):
    r, _ = duffing
    return identify_eddi(r, parse_terms(DAMPING), DEG5, smooth_window=1)


@pytest.fixture(scope="module")
def k4_oscillator():
    sys = linear_system(1.0, 0.02, 4.0)
    r = integrate_rk45(sys, (0.0, 1.0), SolverSpec(1000.0, 30.0))
    return r, sys


class TestLagrangian:
    def test_conservative_crossings(self):
        T = TimeSeries(0.0, 0.1, [2.0, 0.7, 2.0])
        E = T.with_values(np.full(3, 2.0))
        L = lagrangian(T, E).values
        assert L[0] == 2.0 and L[2] == 2.0

    def test_all_kinetic(self):
        T = TimeSeries(0.0, 0.1, [1.0, 3.0, 2.0])
        np.testing.assert_array_equal(lagrangian(T, T).values, T.values)

    def test_linear_oscillator(self, linear_oscillator):
        r, sys = linear_oscillator
        L = lagrangian(kinetic_energy(r), sys.mechanical_energy(r)).values
        closed = 0.5 * r.qd.values**2 - 0.5 * r.q.values**2
        E0 = sys.mechanical_energy(r).values[0]
        assert np.abs(L - closed).max() < 0.005 * E0


class TestConservativeForce:
    def test_linear_spring(self, k4_oscillator):
        r, sys = k4_oscillator
        res = exact_phase_two(r, sys, parse_terms("q"))
        cf = res.samples
        assert np.abs(cf.force + 4.0 * cf.q).max() < 0.02 * np.abs(cf.force).max()

    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_free_particle(self, scheme):
        r = Response(sampled(lambda t: 2.0 * t - 1.0, 1.0, 1e-3),
                     sampled(lambda t: np.full_like(t, 2.0), 1.0, 1e-3), 1.5)
        T = kinetic_energy(r)
        cf = conservative_force(lagrangian(T, T), r, smooth_window=1, scheme=scheme)
        assert cf.mask[1:-1].all()
        assert np.abs(cf.force).max() < 1e-9

    def test_secant_ends_dropped(self, k4_oscillator):
        r, sys = k4_oscillator
        cf = exact_phase_two(r, sys, parse_terms("q")).samples
        assert not cf.mask[0] and not cf.mask[-1]

    def test_unknown_scheme(self, k4_oscillator):
        r, _ = k4_oscillator
        T = kinetic_energy(r)
        with pytest.raises(DataError):
            conservative_force(lagrangian(T, T), r, scheme="forward")

    def test_turning_points_masked(self, k4_oscillator):
        r, sys = k4_oscillator
        cf = exact_phase_two(r, sys, parse_terms("q")).samples
        assert not cf.mask.all()
        assert np.all(np.abs(cf.dq[cf.mask]) >= 1e-3 * np.abs(cf.dq).max())
        assert np.isnan(cf.force_samples[~cf.mask]).all()

    def test_retained_forces_bounded(self, duffing_eddi):
        f = duffing_eddi.stiffness.samples.force
        assert np.isfinite(f).all()
        assert np.abs(f).max() <= 10 * np.percentile(np.abs(f), 99)

    def test_all_masked(self):
        r = Response(TimeSeries(0.0, 0.1, np.ones(10)), TimeSeries(0.0, 0.1, np.zeros(10)), 1.0)
        T = kinetic_energy(r)
        with pytest.raises(AllMasked):
            conservative_force(lagrangian(T, T), r)

    def test_bad_threshold(self, k4_oscillator):
        r, _ = k4_oscillator
        T = kinetic_energy(r)
        with pytest.raises(DataError):
            conservative_force(lagrangian(T, T), r, eps_dq=0.0)

    def test_smoothing_keeps_mask(self, k4_oscillator):
        r, sys = k4_oscillator
        T = kinetic_energy(r)
        L = lagrangian(T, sys.mechanical_energy(r))
        raw = conservative_force(L, r, smooth_window=1)
        smooth = conservative_force(L, r, smooth_window=25)
        np.testing.assert_array_equal(raw.mask, smooth.mask)
        assert np.abs(smooth.force + 4.0 * smooth.q).max() < 0.05 * np.abs(smooth.force).max()


class TestSecant:
    @given(n=st.integers(1, 7), a=st.floats(-2, 2), b=st.floats(-2, 2))
    def test_mean_matches_quadrature(self, n, a, b):
        # Gauss-Legendre with 4 nodes integrates degree 7 exactly
        x, w = np.polynomial.legendre.leggauss(4)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        ref = 0.5 * np.sum(w * (mid + half * x) ** n)
        assert secant_mean(n, a, b) == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_degenerate_interval(self):
        assert secant_mean(3, 0.5, 0.5) == 0.125

    def test_duffing_exact_energy(self, duffing):
        # both discrete identities are exact, so only rounding remains
        r, truth = duffing
        k = exact_phase_two(r, truth, DEG5).model.coeffs
        np.testing.assert_allclose(k[[0, 2]], [300.0, 3e8], rtol=1e-6)
        qmax = np.abs(r.q.values).max()
        for j in (1, 3, 4):
            assert abs(k[j]) * qmax ** (j + 1) < 1e-6 * 3e8 * qmax**3

    def test_point_scheme_biased(self, duffing):
        r, truth = duffing
        k = exact_phase_two(r, truth, DEG5, scheme="point").model.coeffs
        assert abs(k[0] / 300.0 - 1) > 0.02


class TestFit:
    def test_exact_polynomial(self):
        q = np.linspace(-1.0, 1.0, 201)
        cf = ConservativeForceSamples(q, -(2 * q + 7 * q**3), np.ones_like(q, dtype=bool))
        model, rms = fit_stiffness(cf, BasisLibrary.polynomial(3))
        np.testing.assert_allclose(model.coeffs, [2.0, 0.0, 7.0], atol=1e-9)
        assert rms < 1e-12

    def test_rejects_velocity_terms(self):
        q = np.linspace(-1.0, 1.0, 11)
        cf = ConservativeForceSamples(q, q, np.ones_like(q, dtype=bool))
        with pytest.raises(DataError):
            fit_stiffness(cf, parse_terms("q, qd"))

    def test_idempotent(self, duffing_eddi):
        model = duffing_eddi.system.stiffness
        cf = duffing_eddi.stiffness.samples
        forces = np.full_like(cf.q_samples, np.nan)
        forces[cf.mask] = -cf.design(DEG5) @ model.coeffs
        again, _ = fit_stiffness(
            ConservativeForceSamples(cf.q_samples, forces, cf.mask, cf.dq, cf.span), DEG5)
        # monomial columns up to q^5 on |q| < 0.013 cost about four digits
        np.testing.assert_allclose(again.coeffs, model.coeffs, rtol=1e-9,
                                   atol=1e-12 * np.abs(model.coeffs).max())

    def test_weighted(self, k4_oscillator):
        r, sys = k4_oscillator
        k = exact_phase_two(r, sys, parse_terms("q"), weighted=True).model.coeffs
        assert k[0] == pytest.approx(4.0, rel=0.01)


class TestBenchmarks:
    def test_duffing_coefficients(self, duffing_eddi):
        k = duffing_eddi.system.stiffness.coeffs
        assert k[2] == pytest.approx(3e8, rel=0.01)
        assert k[0] == pytest.approx(300.0, rel=0.1)

    def test_duffing_restoring_curve(self, duffing_eddi):
        x = np.linspace(-0.013, 0.013, 101)
        truth = 300.0 * x + 3e8 * x**3
        fitted = duffing_eddi.system.stiffness(x)
        assert np.abs(fitted - truth).max() < 0.05 * np.abs(truth).max()

    def test_duffing_even_terms_small(self, duffing_eddi):
        k = duffing_eddi.system.stiffness.coeffs
        qmax = np.abs(duffing_eddi.stiffness.samples.q).max()
        dominant = abs(k[0]) * qmax + abs(k[2]) * qmax**3
        for j in (1, 3):
            assert abs(k[j]) * qmax ** (j + 1) < 0.05 * dominant

    def test_pendulum(self, pendulum):
        r, _ = pendulum
        res = identify_eddi(r, parse_terms(DAMPING), DEG5, smooth_window=1)
        k = res.system.stiffness.coeffs
        assert k[0] == pytest.approx(15.696, rel=0.01)
        assert k[2] == pytest.approx(-2.616, rel=0.05)
        assert k[4] == pytest.approx(0.1308, rel=0.25)

    def test_hardening_released_from_rest(self):
        truth = IdentifiedSystem(
            0.05,
            DampingModel(parse_terms("qd"), [0.5]),
            StiffnessModel(parse_terms("q, q^3"), [300.0, 3e8]),
        )
        r = integrate_rk45(truth, (0.01, 0.0), SolverSpec(1e4, 1.0))
        res = identify_eddi(r, parse_terms("qd"), parse_terms("q, q^3"), smooth_window=1)
        assert res.system.stiffness.coeffs[0] > 0
