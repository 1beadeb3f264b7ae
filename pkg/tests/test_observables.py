import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radcool.model import SystemParams
from radcool.observables import (
    GridMismatchError,
    Regime,
    coherent_displacement,
    detect_stabilization,
    phonon_decomposition,
    photon_decomposition,
)
from radcool.propagator import evolve_transition, simulate
from radcool.sweep import RunSettings, run_scenario

DT = 0.05


def series(fn, t_end=400.0):
    t = np.arange(0, t_end, DT)
    return t, fn(t)


class TestDecompositions:
    def test_parts_add_up(self, cooling_params):
        run = simulate(cooling_params, 30.0, sample_every=0.5)
        ph = phonon_decomposition(run.moments, run.grid, cooling_params)
        np.testing.assert_allclose(ph.n_total, run.moments.G[:, 3, 2].real, rtol=1e-9)
        pt = photon_decomposition(run.moments, run.mean, cooling_params)
        assert np.all(pt.n_sys >= -1e-12)
        assert np.all(pt.n_noise >= -1e-12)

    def test_grid_mismatch(self, cooling_params):
        run = simulate(cooling_params, 10.0, sample_every=0.5)
        other = evolve_transition(cooling_params, 10.0, sample_every=1.0)
        with pytest.raises(GridMismatchError):
            phonon_decomposition(run.moments, other, cooling_params)

    def test_needs_split_parts(self, cooling_params):
        run = simulate(cooling_params, 5.0, sample_every=0.5,
                       sources={"noise": np.zeros((4, 4))})
        with pytest.raises(ValueError):
            phonon_decomposition(run.moments, run.grid, cooling_params)

    def test_empty_cavity_photons(self):
        p = SystemParams(g=0.0, gamma_m=1e-3, omega_m=10, delta=10, drive_E=1e3, n_th=100)
        run = simulate(p, 10.0, sample_every=0.1)
        n = photon_decomposition(run.moments, run.mean, p).n_total
        assert n[-1] == pytest.approx(1e6 / 101, rel=1e-3)

    @given(st.floats(0, 100), st.floats(-20, 20))
    def test_displacement_bounded(self, t, delta):
        p = SystemParams(g=0.0, gamma_m=1e-3, omega_m=10, delta=delta, drive_E=2.0, n_th=0)
        assert abs(coherent_displacement(p, t)) <= 2.0 * t + 1e-12


class TestDetectStabilization:
    def test_cooling_curve(self):
        t, n = series(lambda t: 0.3 + 99.7 * np.exp(-0.2 * t))
        n_sys = 100 * np.exp(-0.2 * t)
        r = detect_stabilization(n, DT, n_sys=n_sys, n_th=100.0)
        assert r.regime is Regime.COOLING
        assert r.stabilized
        assert n_sys[int(round(r.t_s / DT))] < 1.0
        assert r.n_mf == pytest.approx(0.3, rel=1e-6)

    def test_growth_is_heating(self):
        t, n = series(lambda t: np.exp(0.05 * t))
        r = detect_stabilization(n, DT, n_th=1.0)
        assert r.regime is Regime.HEATING
        assert r.unbounded and r.n_mf is None

    def test_non_finite_is_heating(self):
        t, n = series(lambda t: np.where(t > 300, np.inf, 1.0))
        assert detect_stabilization(n, DT).regime is Regime.HEATING

    def test_constant_is_equilibrium(self):
        t, n = series(lambda t: np.full_like(t, 100.0))
        r = detect_stabilization(n, DT, n_th=100.0)
        assert r.regime is Regime.EQUILIBRIUM
        assert r.t_s == 0.0 and r.n_mf == 100.0

    def test_too_short(self):
        t, n = series(lambda t: t, t_end=60.0)
        assert detect_stabilization(n, DT).regime is Regime.INCONCLUSIVE

    def test_stable_above_initial_is_transitional(self):
        t, n = series(lambda t: 5.0 - 4.0 * np.exp(-0.3 * t))
        r = detect_stabilization(n, DT, n_sys=np.exp(-0.3 * t), n_th=1.0)
        assert r.regime is Regime.TRANSITIONAL
        assert r.t_s is not None

    def test_slow_beating_is_transitional(self):
        t, n = series(lambda t: 1.0 + 0.8 * np.sin(2 * np.pi * t / 120.0))
        r = detect_stabilization(n, DT, n_th=2.0, growth_factor=10.0)
        assert r.regime is Regime.TRANSITIONAL
        assert r.t_s is None


class TestScenarios:
    def test_heating_bracket(self):
        s = RunSettings(t_end=400.0)
        low = run_scenario(SystemParams.from_J(2.0, omega_m=10, gamma_m=1e-3, n_th=100), s)
        high = run_scenario(SystemParams.from_J(3.0, omega_m=10, gamma_m=1e-3, n_th=100), s)
        assert low.report.regime is not Regime.HEATING
        assert high.report.regime is Regime.HEATING

    def test_system_part_vanishes(self, cooling_params):
        r = run_scenario(cooling_params, RunSettings(t_end=300.0))
        k = int(np.searchsorted(r.t, r.report.t_s))
        assert r.phonon.n_s[k] < 1e-2 * cooling_params.n_th
        assert np.all(np.diff(r.phonon.n_s[k:]) <= 1e-15)
        assert np.ptp(r.phonon.n_noise[k:]) < 2 * r.report.n_mf
