import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radcool.model import (
    SWAP,
    InvalidParameterError,
    SystemParams,
    coherent_drive,
    dimensionless,
    drive_kernel,
    dynamical_matrix,
    noise_moments,
    solve_for_J,
)

rates = st.floats(0.0, 50.0, allow_nan=False)
times = st.floats(0.0, 200.0, allow_nan=False)


def make(**kw):
    base = dict(g=1e-5, gamma_m=1e-3, omega_m=10.0, delta=10.0, drive_E=1e6, n_th=100.0)
    base.update(kw)
    return SystemParams(**base)


class TestSystemParams:
    def test_rejects_negative_and_zero_frequency(self):
        with pytest.raises(InvalidParameterError):
            make(gamma_m=-1.0)
        with pytest.raises(InvalidParameterError):
            make(omega_m=0.0)
        with pytest.raises(InvalidParameterError):
            make(kappa=2.0)
        with pytest.raises(InvalidParameterError):
            make(n_th=float("nan"))

    def test_validity_flag(self):
        assert make(g=1e-5).valid
        assert not make(g=0.1, omega_m=10.0).valid

    def test_from_J_and_solve(self):
        p = SystemParams.from_J(0.8, omega_m=10.0, gamma_m=1e-3, n_th=100.0)
        assert p.drive_E == pytest.approx(8e5)
        assert p.delta == p.omega_m
        q = solve_for_J(p, 0.4, vary="g")
        assert q.J == pytest.approx(0.4)
        assert q.drive_E == p.drive_E
        with pytest.raises(ValueError):
            solve_for_J(p, 0.4, vary="kappa")


class TestDimensionless:
    def test_fig2_value(self):
        assert dimensionless(make()).J == pytest.approx(1.0, rel=1e-12)

    def test_fig3a_value(self):
        assert dimensionless(make(drive_E=8e5)).J == pytest.approx(0.8, rel=1e-12)

    def test_no_drive(self):
        assert dimensionless(make(drive_E=0.0)).J == 0.0

    def test_zero_damping_is_rejected(self):
        with pytest.raises(InvalidParameterError):
            dimensionless(make(gamma_m=0.0))

    @given(st.floats(1e-7, 1e-3), st.floats(0.1, 100), st.floats(1e-4, 1.0),
           st.floats(0.0, 1e7))
    def test_identities(self, g, w, gm, E):
        d = dimensionless(make(g=g, omega_m=w, delta=w, gamma_m=gm, drive_E=E))
        assert d.J == pytest.approx(d.G_m * d.calE / d.s_m, rel=1e-12)
        assert d.Q * d.Gamma_m == pytest.approx(d.s_m, rel=1e-12)


class TestDriveKernel:
    def test_zero_time(self):
        assert drive_kernel(0.0, 3.0) == 0

    def test_zero_detuning_limit(self):
        t = np.linspace(0, 5, 11)
        np.testing.assert_allclose(drive_kernel(t, 0.0), 1j * t)
        np.testing.assert_allclose(drive_kernel(t, 1e-9), 1j * t, atol=1e-8)

    def test_resonant_form(self):
        w = 10.0
        t = np.linspace(0, 3, 50)
        lhs = drive_kernel(t, w) * np.exp(-1j * w * t)
        np.testing.assert_allclose(lhs, (1 - np.exp(-1j * w * t)) / w, atol=1e-15)

    @given(st.floats(-20, 20), times)
    def test_branches_agree_with_closed_form(self, delta, t):
        f = drive_kernel(t, delta)
        if abs(delta * t) > 1e-3:
            exact = (np.exp(1j * delta * t) - 1) / delta
            assert abs(f - exact) <= 1e-12 * max(1.0, abs(exact))
        assert abs(f) <= t + 1e-12


class TestDynamicalMatrix:
    def test_uncoupled(self):
        M = dynamical_matrix(make(drive_E=0.0), 3.7)
        np.testing.assert_array_equal(M, np.diag([-1.0, -1.0, -1e-3, -1e-3]))

    def test_initial_time(self):
        M = dynamical_matrix(make(), 0.0)
        np.testing.assert_array_equal(M - np.diag(np.diag(M)), 0)

    @given(st.floats(0.1, 50), st.floats(-50, 50), times)
    @settings(max_examples=60)
    def test_conjugation_symmetry(self, w, delta, t):
        M = dynamical_matrix(make(omega_m=w, delta=delta), t)
        np.testing.assert_allclose(SWAP @ M.conj() @ SWAP, M, atol=1e-12 * np.abs(M).max())

    @given(times)
    def test_commutators_preserved(self, t):
        # dK/dt = M K + K M^T + N - N^T must vanish for the commutator matrix K
        p = make()
        M = dynamical_matrix(p, t)
        K = np.zeros((4, 4))
        K[0, 1], K[1, 0], K[2, 3], K[3, 2] = 1, -1, 1, -1
        N = noise_moments(p).N
        res = M @ K + K @ M.T + N - N.T
        assert np.abs(res).max() <= 1e-9 * np.abs(M).max()

    def test_vectorized(self):
        t = np.array([0.1, 0.2, 0.3])
        M = dynamical_matrix(make(), t)
        assert M.shape == (3, 4, 4)
        np.testing.assert_allclose(M[1], dynamical_matrix(make(), 0.2), rtol=1e-14)


class TestCoherentDrive:
    def test_zero_cases(self):
        np.testing.assert_array_equal(coherent_drive(make(), 0.0), 0)
        np.testing.assert_array_equal(coherent_drive(make(drive_E=0.0), np.arange(5.0)), 0)

    @given(times)
    def test_conjugate_pairs(self, t):
        lam = coherent_drive(make(), t)
        assert lam[1] == np.conj(lam[0])
        assert lam[3] == np.conj(lam[2])


class TestNoiseMoments:
    def test_entries(self):
        N = noise_moments(make(gamma_m=2e-3, n_th=5.0)).N
        expect = np.zeros((4, 4))
        expect[0, 1] = 2.0
        expect[2, 3] = 2 * 2e-3 * 6
        expect[3, 2] = 2 * 2e-3 * 5
        np.testing.assert_array_equal(N, expect)
        assert N[1, 0] == 0

    def test_sources_sum(self):
        nm = noise_moments(make())
        np.testing.assert_array_equal(sum(nm.sources().values()), nm.N)
