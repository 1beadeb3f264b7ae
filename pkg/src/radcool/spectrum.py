"""Stationary cavity noise correlation and its spectrum.

The two-time correlation ``C(tau) = <da^dag(t + tau) da(t)>`` of the noise-only
fluctuations follows from quantum regression: noise entering after ``t`` is
uncorrelated with the operators at ``t``, so ``C(tau) = [D(t + tau, t) G_n(t)]_21``.
Because the stabilized state keeps oscillating at the mechanical frequency,
``C`` is averaged over start times spread across one mechanical period.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.signal import find_peaks

from .model import SystemParams
from .observables import StabilizationReport, detect_stabilization
from .propagator import Scheme, _step_blocks, default_step, simulate

__all__ = [
    "NotStabilizedError",
    "SpectrumResult",
    "two_time_correlation",
    "noise_spectrum",
    "DECAY_CUTOFF",
    "PEAK_FRACTION",
]

# a rectangular cut at 1e-4 leaves sinc ripples near -1e-6 of the peak
DECAY_CUTOFF = 1e-6
PEAK_FRACTION = 0.05


class NotStabilizedError(RuntimeError):
    """Raised when the correlation is requested outside a stabilized phase."""

    def __init__(self, report: StabilizationReport, t_s):
        super().__init__(
            f"no stabilized phase at kappa*t = {t_s:.6g} (regime {report.regime.value}, "
            f"detected t_s = {report.t_s})"
        )
        self.report = report


@dataclass(frozen=True)
class SpectrumResult:
    """Correlation and spectrum of the cavity noise.

    ``omega_grid`` is measured in the rotating frame of the linearized
    fluctuations, i.e. relative to the drive-shifted cavity resonance.
    ``peaks`` lists ``(frequency, height)`` pairs in increasing frequency.
    """

    tau_grid: np.ndarray
    C_tau: np.ndarray
    omega_grid: np.ndarray
    C_omega: np.ndarray
    peaks: list

    @property
    def peak_frequencies(self) -> np.ndarray:
        return np.array([p[0] for p in self.peaks])


@njit(cache=True)
def _regress(S, k0, starts, X, out, stride, n_tau):
    """Advance each vector ``X[i]`` from global step ``starts[i]``; record component 1."""
    tmp = np.zeros(4, dtype=np.complex128)
    span = n_tau * stride
    for s in range(S.shape[0]):
        k = k0 + s
        for i in range(starts.shape[0]):
            rel = k - starts[i]
            if rel < 0 or rel >= span:
                continue
            for a in range(4):
                acc = 0j
                for m in range(4):
                    acc += S[s, a, m] * X[i, m]
                tmp[a] = acc
            X[i, :] = tmp
            if (rel + 1) % stride == 0:
                out[i, (rel + 1) // stride] = X[i, 1]


def _tau_stride(params, dt):
    # four samples per period of the fastest phase factor
    w_max = max(2 * params.omega_m, abs(params.delta) + params.omega_m, params.kappa)
    return max(1, int(np.pi / (2 * w_max * dt)))


def two_time_correlation(params: SystemParams, t_s, tau_max=200.0, step=None,
                         scheme=Scheme.MIDPOINT_EXP, *, report=None, n_avg=16,
                         window=50.0):
    """Period-averaged noise correlation ``C(tau)`` of the cavity field from ``t_s``.

    Parameters
    ----------
    t_s : float
        Start of the stabilized phase.  The start times used for averaging
        lie in ``[t_s, t_s + 2 pi / omega_m)``.
    tau_max : float
        Largest delay computed.
    report : StabilizationReport, optional
        Outcome of a previous stabilization check.  When omitted the phonon
        series up to ``t_s`` is simulated and checked here.
    n_avg : int
        Number of start times across one mechanical period.

    Returns
    -------
    tau, C : ndarray
        Uniform delays and the averaged complex correlation.

    Raises
    ------
    NotStabilizedError
        If the run is not stabilized at ``t_s``.
    """
    scheme = Scheme(scheme)
    dt = default_step(params) if step is None else float(step)
    period = 2 * np.pi / params.omega_m
    spacing = max(1, int(round(period / (n_avg * dt))))
    k_first = int(np.ceil(t_s / (dt * spacing))) * spacing
    starts = k_first + spacing * np.arange(n_avg)
    t_last = starts[-1] * dt
    if report is None:
        # enough series after t_s for the detector's windows
        t_last = max(t_last, t_s + window, 4 * window)

    run = simulate(params, t_last, dt, scheme, sample_every=spacing * dt, want_mean=False,
                   raise_on_divergence=False)
    if report is None:
        n = run.moments.G[:, 3, 2].real
        report = detect_stabilization(n, spacing * dt, n_sys=run.moments.parts["sys"][:, 3, 2].real,
                                      n_th=params.n_th, window=window)
    late = report.t_s is None or report.t_s > t_s + 1e-9
    if run.diverged_at is not None or not report.stabilized or late:
        raise NotStabilizedError(report, t_s)

    idx = starts // spacing
    Gn = run.moments.noise[idx]
    X = np.ascontiguousarray(Gn[:, :, 0])

    stride = _tau_stride(params, dt)
    n_tau = max(1, int(round(tau_max / (stride * dt))))
    out = np.empty((n_avg, n_tau + 1), dtype=complex)
    out[:, 0] = X[:, 1]
    k_end = starts[-1] + n_tau * stride
    for k0, S, *_ in _step_blocks(params, dt, scheme, starts[0], k_end, with_drive=False):
        _regress(S, k0, starts, X, out, stride, n_tau)
    tau = np.arange(n_tau + 1) * stride * dt
    return tau, out.mean(axis=0)


def noise_spectrum(tau, C, *, cutoff=DECAY_CUTOFF, peak_fraction=PEAK_FRACTION,
                   pad_factor=8) -> SpectrumResult:
    """Fourier transform ``C(omega) = int C(tau) exp(i omega tau) dtau`` over all ``tau``.

    The negative-delay half is the Hermitian extension ``C(-tau) = C*(tau)``,
    which makes the spectrum real.  Delays beyond the point where ``|C|``
    has decayed below ``cutoff * |C(0)|`` for good are dropped (rectangular
    window over the decayed support) and the result is zero padded to
    ``pad_factor`` times its length for a finer frequency grid.

    With the trapezoid weight ``1/2`` on ``tau = 0`` the discrete transform
    satisfies ``sum C(omega) d omega / (2 pi) = C(0)`` exactly.
    """
    tau = np.asarray(tau, dtype=float)
    C = np.asarray(C, dtype=complex)
    if tau.ndim != 1 or tau.shape != C.shape or len(tau) < 2:
        raise ValueError("tau and C must be 1-d arrays of equal length >= 2")
    dtau = tau[1] - tau[0]
    if not np.allclose(np.diff(tau), dtau, rtol=1e-9, atol=0) or tau[0] != 0:
        raise ValueError("tau must be a uniform grid starting at 0")

    mag = np.abs(C)
    above = np.nonzero(mag > cutoff * mag[0])[0]
    keep = len(C) if above.size == 0 else min(len(C), above[-1] + 2)
    if keep == len(C) and len(C) > 2:
        warnings.warn("correlation has not decayed below the cutoff; extend tau_max",
                      RuntimeWarning, stacklevel=2)
    tau, C = tau[:keep], C[:keep]

    n_fft = 1 << int(np.ceil(np.log2(pad_factor * 2 * keep)))
    x = np.zeros(n_fft, dtype=complex)
    x[:keep] = C
    x[0] *= 0.5
    # sum_k x_k exp(+i w tau_k) over the positive half, conjugate partner added
    half = n_fft * np.fft.ifft(x)
    spec = 2 * dtau * half.real
    omega = 2 * np.pi * np.fft.fftfreq(n_fft, d=dtau)
    order = np.argsort(omega)
    omega, spec = omega[order], spec[order]

    top = spec.max()
    loc, _ = find_peaks(spec, height=peak_fraction * top)
    peaks = [(float(omega[i]), float(spec[i])) for i in loc]
    return SpectrumResult(tau, C, omega, spec, peaks)
