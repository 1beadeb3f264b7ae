"""Phonon and photon bookkeeping, and detection of the stabilized phase."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import SystemParams, drive_kernel
from .propagator import MeanTrajectory, MomentSeries, TransitionGrid

__all__ = [
    "GridMismatchError",
    "Regime",
    "PhononDecomposition",
    "PhotonDecomposition",
    "StabilizationReport",
    "phonon_decomposition",
    "photon_decomposition",
    "coherent_displacement",
    "detect_stabilization",
]


class GridMismatchError(ValueError):
    pass


class Regime(str, enum.Enum):
    COOLING = "cooling"
    HEATING = "heating"
    TRANSITIONAL = "transitional"
    EQUILIBRIUM = "equilibrium"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class PhononDecomposition:
    """Thermal phonon number split by origin, as time series.

    ``n_s`` comes from the initial system operators; ``n_n_cav`` from cavity
    vacuum noise, ``n_n_mech_bs`` and ``n_n_mech_sq`` from mechanical reservoir
    noise entering through the beam-splitter and squeezing channels.
    """

    t: np.ndarray
    n_s: np.ndarray
    n_n_cav: np.ndarray
    n_n_mech_bs: np.ndarray
    n_n_mech_sq: np.ndarray

    @property
    def n_noise(self):
        return self.n_n_cav + self.n_n_mech_bs + self.n_n_mech_sq

    @property
    def n_total(self):
        return self.n_s + self.n_noise


@dataclass(frozen=True)
class PhotonDecomposition:
    t: np.ndarray
    n_sys: np.ndarray
    n_noise: np.ndarray
    n_coh: np.ndarray

    @property
    def n_total(self):
        return self.n_sys + self.n_noise + self.n_coh


def _check_grid(t_a, t_b):
    if len(t_a) != len(t_b) or not np.allclose(t_a, t_b, rtol=0, atol=1e-9):
        raise GridMismatchError("time grids of the inputs differ")


def phonon_decomposition(moments: MomentSeries, grid: TransitionGrid,
                         params: SystemParams) -> PhononDecomposition:
    _check_grid(moments.t, grid.t_grid)
    missing = {"cav", "bs", "sq"} - set(moments.parts)
    if missing:
        raise ValueError(f"moment series lacks split noise parts {sorted(missing)}")
    d = grid.D0
    n = params.n_th
    with np.errstate(over="ignore", invalid="ignore"):
        n_s = (np.abs(d[:, 3, 0]) ** 2 + np.abs(d[:, 3, 3]) ** 2 * n
               + np.abs(d[:, 3, 2]) ** 2 * (n + 1))
    p = moments.parts
    return PhononDecomposition(
        t=moments.t,
        n_s=n_s,
        n_n_cav=p["cav"][:, 3, 2].real,
        n_n_mech_bs=p["bs"][:, 3, 2].real,
        n_n_mech_sq=p["sq"][:, 3, 2].real,
    )


def coherent_displacement(params: SystemParams, t):
    """Cavity displacement ``E * int_0^t exp(i delta s) ds`` of the bare drive."""
    return -1j * params.drive_E * drive_kernel(t, params.delta)


def photon_decomposition(moments: MomentSeries, mean: MeanTrajectory,
                         params: SystemParams) -> PhotonDecomposition:
    """Cavity photon number as system, noise and coherent contributions.

    The coherent part is the squared modulus of the bare-drive displacement
    plus the coupling-induced mean ``<a(t)>``; the two interfere.
    """
    _check_grid(moments.t, mean.t)
    n_sys = moments.parts["sys"][:, 1, 0].real
    n_noise = moments.noise[:, 1, 0].real
    amp = coherent_displacement(params, moments.t) + mean.c_mean[:, 0]
    with np.errstate(over="ignore", invalid="ignore"):
        n_coh = np.abs(amp) ** 2
    return PhotonDecomposition(moments.t, n_sys, n_noise, n_coh)


@dataclass(frozen=True)
class StabilizationReport:
    """Outcome of the stabilization detector.

    ``n_mf`` is the mean over the last window; it is None for heating runs,
    which carry ``unbounded=True`` instead.
    """

    regime: Regime
    t_s: float | None
    n_mf: float | None
    window: float
    unbounded: bool = False
    window_means: np.ndarray | None = None

    @property
    def stabilized(self) -> bool:
        return self.regime in (Regime.COOLING, Regime.EQUILIBRIUM) or (
            self.regime is Regime.TRANSITIONAL and self.t_s is not None
        )


def detect_stabilization(n_series, dt_sample, *, n_sys=None, n_th=None,
                         window=50.0, rel_tol=1e-3, sys_frac=1e-2,
                         growth_factor=2.0, oscillation=0.1) -> StabilizationReport:
    """Locate the stabilized phase of a uniformly sampled occupation series.

    The stabilization time is the first sample at which the mean over the
    following ``window`` differs from the mean over the preceding one by less
    than ``rel_tol`` (relative) while the system-operator part ``n_sys`` has
    fallen below ``sys_frac * n_th`` (or ``sys_frac`` times the window mean
    when ``n_th`` is zero).

    Heating is declared when the means of consecutive disjoint windows grow
    three times in a row while exceeding ``growth_factor`` times the running
    minimum, or when the series stops being finite.
    """
    n = np.asarray(n_series, dtype=float)
    w = max(1, int(round(window / dt_sample)))
    nw = len(n) // w
    if nw < 3:
        return StabilizationReport(Regime.INCONCLUSIVE, None, None, window)

    with np.errstate(over="ignore", invalid="ignore"):
        means = n[: nw * w].reshape(nw, w).mean(axis=1)

    if not np.all(np.isfinite(means)):
        return StabilizationReport(Regime.HEATING, None, None, window, True, means)

    run = 0
    running_min = means[0]
    for k in range(1, nw):
        running_min = min(running_min, means[k])
        if means[k] > means[k - 1] and means[k] > growth_factor * running_min:
            run += 1
            if run >= 3:
                return StabilizationReport(Regime.HEATING, None, None, window, True, means)
        else:
            run = 0

    scale = max(abs(n[0]), 1e-300)
    if np.ptp(n) <= 1e-6 * scale:
        return StabilizationReport(Regime.EQUILIBRIUM, 0.0, float(means[-1]), window,
                                   False, means)

    # sliding comparison of the windows before and after each sample
    with np.errstate(over="ignore", invalid="ignore"):
        csum = np.concatenate(([0.0], np.cumsum(n)))
        starts = np.arange(w, len(n) - w + 1)
        before = (csum[starts] - csum[starts - w]) / w
        after = (csum[starts + w] - csum[starts]) / w
        ok = np.abs(after - before) < rel_tol * np.abs(after)
    if n_sys is not None:
        ref = n_th if n_th else after
        ok &= np.asarray(n_sys)[starts] < sys_frac * np.asarray(ref)
    hit = np.nonzero(ok)[0]
    if hit.size:
        n_mf = float(means[-1])
        cooled = not n_th or n_mf < n_th
        regime = Regime.COOLING if cooled else Regime.TRANSITIONAL
        return StabilizationReport(regime, float(starts[hit[0]] * dt_sample), n_mf, window,
                                   False, means)

    tail = means[-3:]
    if np.ptp(tail) > oscillation * abs(tail.mean()):
        return StabilizationReport(Regime.TRANSITIONAL, None, float(means[-1]), window,
                                   False, means)
    return StabilizationReport(Regime.INCONCLUSIVE, None, None, window, False, means)
