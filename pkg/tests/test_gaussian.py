import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radcool.gaussian import (
    GaussianState,
    InconsistentMomentsError,
    purity,
    thermal_occupation,
    to_gaussian,
    wigner,
    wigner_grid,
)
from radcool.model import SystemParams
from radcool.propagator import SecondMoments, initial_second_moments, simulate


def thermal_state(n_th):
    p = SystemParams(g=0.0, gamma_m=1e-3, omega_m=1.0, delta=1.0, drive_E=0.0, n_th=n_th)
    return to_gaussian(SecondMoments(initial_second_moments(p), 0.0))


class TestConversion:
    def test_thermal_covariance(self):
        st_ = thermal_state(3.0)
        np.testing.assert_allclose(st_.sigma, np.diag([0.5, 0.5, 3.5, 3.5]), atol=1e-15)

    def test_broken_commutator_rejected(self):
        G = initial_second_moments(SystemParams(g=0, gamma_m=1e-3, omega_m=1, delta=1,
                                                drive_E=0, n_th=1))
        G[0, 1] = 0.5
        with pytest.raises(InconsistentMomentsError):
            to_gaussian(G)

    def test_uncertainty_violation_rejected(self):
        with pytest.raises(InconsistentMomentsError):
            GaussianState(np.zeros(2), np.diag([0.1, 0.1]))

    def test_uncertainty_along_a_cooling_run(self, cooling_params):
        run = simulate(cooling_params, 100.0, sample_every=0.5)
        for G in run.moments.G:
            to_gaussian(G)

    def test_means_map_to_quadratures(self):
        mean4 = np.array([1 + 2j, 1 - 2j, 0.5j, -0.5j])
        s = to_gaussian(initial_second_moments(SystemParams(
            g=0, gamma_m=1e-3, omega_m=1, delta=1, drive_E=0, n_th=0)), mean4)
        np.testing.assert_allclose(s.mean, np.sqrt(2) * np.array([1, 2, 0, 0.5]))


class TestPurity:
    def test_thermal(self):
        assert purity(thermal_state(100.0), "mechanical") == pytest.approx(1 / 201)

    @pytest.mark.parametrize("mode", ["full", "cavity", "mechanical"])
    def test_vacuum(self, mode):
        assert purity(thermal_state(0.0), mode) == pytest.approx(1.0, rel=1e-14)

    @given(st.floats(0, 1e3))
    def test_thermal_occupation_roundtrip(self, n):
        assert thermal_occupation(thermal_state(n)) == pytest.approx(n, abs=1e-9 * (1 + n))


class TestWigner:
    def test_thermal_form(self):
        n = 2.0
        st_ = thermal_state(n)
        pts = np.array([[0.0, 0.0], [1.0, -0.5], [2.0, 3.0]])
        r2 = (pts ** 2).sum(axis=1)
        expect = np.exp(-r2 / (1 + 2 * n)) / (np.pi * (1 + 2 * n))
        np.testing.assert_allclose(wigner(st_, pts, "mechanical"), expect, rtol=1e-12)

    def test_coherent_form(self):
        shift = np.array([0.0, 0.0, 1.5, -0.7])
        st_ = thermal_state(0.0).displaced(shift)
        pts = np.array([[1.0, 0.2], [1.5, -0.7]])
        d2 = ((pts - shift[2:]) ** 2).sum(axis=1)
        np.testing.assert_allclose(wigner(st_, pts, "mechanical"), np.exp(-d2) / np.pi)

    def test_normalized(self):
        st_ = thermal_state(1.0)
        q = np.linspace(-12, 12, 301)
        W = wigner_grid(st_, q, q)
        dq = q[1] - q[0]
        assert W.sum() * dq * dq == pytest.approx(1.0, rel=1e-6)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            wigner(thermal_state(1.0), np.zeros((3, 2)), "full")
        with pytest.raises(ValueError):
            wigner_grid(thermal_state(1.0), [0.0], [0.0], "full")

    @given(st.lists(st.floats(-50, 50), min_size=4, max_size=4))
    def test_displacement_invariance(self, shift):
        st_ = thermal_state(4.0)
        moved = st_.displaced(np.array(shift))
        np.testing.assert_array_equal(moved.sigma, st_.sigma)
        assert purity(moved) == purity(st_)
        pt = np.array([0.3, -0.2, 1.0, 0.4])
        assert wigner(moved, pt + np.array(shift)) == pytest.approx(wigner(st_, pt), rel=1e-9)
