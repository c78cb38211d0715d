import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eddi.basis import parse_terms
from eddi.damping import solve_damping
from eddi.errors import AllThresholded, DataError
from eddi.lstsq import solve_pivoted
from eddi.models import Response
from eddi.sindy import StlsqSpec, sindy_identify, stlsq

DAMPING = parse_terms("qd, qd^2, qd^3, q^2*qd")
STIFFNESS = parse_terms("q, q^2, q^3, q^4, q^5")


def theta(r):
    q, qd = r.q.values, r.qd.values
    return np.hstack((DAMPING.matrix(q, qd), STIFFNESS.matrix(q, qd)))


class TestStlsq:
    def test_identity_threshold(self):
        xi = stlsq(np.eye(3), [1.0, 0.001, 2.0], StlsqSpec(0.01, normalize_columns=False))
        np.testing.assert_array_equal(xi, [1.0, 0.0, 2.0])

    @settings(max_examples=20)
    @given(seed=st.integers(0, 2**32 - 1), normalize=st.booleans())
    def test_zero_threshold_is_least_squares(self, seed, normalize):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        xi = stlsq(A, y, StlsqSpec(0.0, normalize_columns=normalize))
        ref = solve_damping(A, y).coeffs
        np.testing.assert_allclose(xi, ref, rtol=1e-12, atol=1e-12)

    def test_sparse_recovery(self):
        rng = np.random.default_rng(42)
        A = rng.normal(size=(200, 4))
        truth = np.array([0.0, 3.0, 0.0, -7.0])
        xi = stlsq(A, A @ truth, StlsqSpec(0.1))
        assert np.abs(xi - truth).max() < 1e-9
        assert xi[0] == 0.0 and xi[2] == 0.0

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        threshold=st.floats(0.0, 2.0),
        normalize=st.booleans(),
    )
    def test_support_never_grows(self, seed, threshold, normalize):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(50, 6))
        y = A @ (rng.normal(size=6) * rng.integers(0, 2, 6)) + 0.1 * rng.normal(size=50)
        history = []
        try:
            stlsq(A, y, StlsqSpec(threshold, normalize_columns=normalize), history)
        except AllThresholded:
            pass
        for before, after in zip(history, history[1:]):
            assert not (after & ~before).any()

    def test_all_thresholded(self):
        with pytest.raises(AllThresholded):
            stlsq(np.eye(2), [1e-3, 1e-3], StlsqSpec(1.0, normalize_columns=False))

    def test_normalization_is_unit_invariant(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(80, 3))
        y = A @ np.array([2.0, 0.0, 1.0]) + 1e-3 * rng.normal(size=80)
        s = np.array([1e-6, 1.0, 1e4])
        spec = StlsqSpec(0.05)
        np.testing.assert_allclose(stlsq(A * s, y, spec) * s, stlsq(A, y, spec), rtol=1e-9)

    @pytest.mark.parametrize("bad", [dict(threshold=-1.0), dict(threshold=0.1, max_iters=0)])
    def test_invalid_spec(self, bad):
        with pytest.raises(DataError):
            StlsqSpec(**bad)


class TestIdentify:
    def test_duffing(self, duffing):
        r, _ = duffing
        sys = sindy_identify(r, DAMPING, STIFFNESS, StlsqSpec(0.05))
        b, k = sys.damping.coeffs, sys.stiffness.coeffs
        assert b[0] == pytest.approx(0.5, rel=0.02)
        assert b[3] == pytest.approx(4000.0, rel=0.02)
        assert k[2] == pytest.approx(3e8, rel=0.02)
        assert k[4] == 0.0

    def test_pendulum(self, pendulum):
        r, _ = pendulum
        sys = sindy_identify(r, DAMPING, STIFFNESS, StlsqSpec(0.005))
        k = sys.stiffness.coeffs
        assert k[0] == pytest.approx(15.691, rel=0.005)
        assert k[2] == pytest.approx(-2.605, rel=0.01)
        assert sys.damping.coeffs[0] == pytest.approx(0.064, rel=0.005)

    def test_pendulum_from_differenced_velocity(self, pendulum):
        r, _ = pendulum
        no_qdd = Response(r.q, r.qd, r.inertia)
        k = sindy_identify(no_qdd, DAMPING, STIFFNESS, StlsqSpec(0.005)).stiffness.coeffs
        assert k[0] == pytest.approx(15.691, rel=1e-3)
        assert k[2] == pytest.approx(-2.605, rel=1e-3)

    def test_zero_threshold_equals_least_squares(self, duffing):
        r, _ = duffing
        sys = sindy_identify(r, DAMPING, STIFFNESS, StlsqSpec(0.0))
        xi = np.concatenate((sys.damping.coeffs, sys.stiffness.coeffs))
        A = theta(r)
        y = -r.inertia * r.qdd.values
        ref = solve_pivoted(A, y).coeffs
        contribution = np.abs(xi - ref) * np.linalg.norm(A, axis=0)
        assert contribution.max() <= 1e-10 * np.linalg.norm(y)

    def test_joint_matches_split(self, duffing):
        r, truth = duffing
        joint = sindy_identify(r, DAMPING, STIFFNESS, StlsqSpec(0.05))
        q, qd = r.q.values, r.qd.values
        y = -r.inertia * r.qdd.values
        spec = StlsqSpec(0.05)
        b = stlsq(DAMPING.matrix(q, qd), y - truth.stiffness(q), spec)
        k = stlsq(STIFFNESS.matrix(q, qd), y - truth.damping(q, qd), spec)
        np.testing.assert_allclose(joint.damping.coeffs[[0, 3]], b[[0, 3]], rtol=0.01)
        np.testing.assert_allclose(joint.stiffness.coeffs[[0, 2]], k[[0, 2]], rtol=0.01)

    def test_rejects_velocity_in_stiffness(self, duffing):
        r, _ = duffing
        with pytest.raises(DataError):
            sindy_identify(r, DAMPING, parse_terms("q, qd"), StlsqSpec(0.05))
