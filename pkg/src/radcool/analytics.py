"""Closed-form results used as references for the simulations.

Covers the cooling limit for infinite sideband resolution, the steady-state
predictions of the rate-equation picture, the classical sideband series of
the cavity field around an oscillating mirror, and the normal-mode splitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import InvalidParameterError, SystemParams

__all__ = [
    "LimitEigenData",
    "PriorPrediction",
    "SidebandSeries",
    "limit_eigen_data",
    "limit_phonon",
    "limit_branch",
    "jump_ratio",
    "prior_weak_prediction",
    "prior_strong_prediction",
    "bessel_jn",
    "classical_sidebands",
    "mode_splitting",
]


@dataclass(frozen=True)
class LimitEigenData:
    lambda_plus: complex
    lambda_minus: complex
    eta_plus: complex
    eta_minus: complex
    Gamma_m: float
    J: float


def limit_eigen_data(J, Gamma_m) -> LimitEigenData:
    root = np.sqrt(complex((1 - Gamma_m) ** 2 - 4 * J * J))
    return LimitEigenData(
        lambda_plus=0.5 * (-1 - Gamma_m + root),
        lambda_minus=0.5 * (-1 - Gamma_m - root),
        eta_plus=-1 + Gamma_m + root,
        eta_minus=-1 + Gamma_m - root,
        Gamma_m=Gamma_m,
        J=J,
    )


def limit_branch(J, Gamma_m) -> str:
    """``"weak"``, ``"strong"`` or ``"jump"`` (exactly at ``J = (1 - Gamma_m)/2``)."""
    Jc = 0.5 * (1 - Gamma_m)
    if J == Jc:
        return "jump"
    return "weak" if J < Jc else "strong"


def limit_phonon(J, Gamma_m, n_th) -> float:
    """Stabilized phonon number at ``Delta = omega_m`` for ``omega_m/kappa -> infinity``.

    Below ``J = (1 - Gamma_m)/2`` the closed form in the eigenvalues
    ``lambda_pm`` and ``eta_pm`` is evaluated; at and above it the constant
    ``Gamma_m * n_th`` is returned (see :func:`limit_branch` for the flag).
    """
    if not 0 < Gamma_m < 1:
        raise InvalidParameterError("limit requires 0 < Gamma_m < 1")
    if J < 0 or n_th < 0:
        raise InvalidParameterError("J and n_th must be >= 0")
    if limit_branch(J, Gamma_m) != "weak":
        return Gamma_m * n_th
    e = limit_eigen_data(J, Gamma_m)
    lp, lm, ep, em = e.lambda_plus.real, e.lambda_minus.real, e.eta_plus.real, e.eta_minus.real
    braces = 4 * ep * em / (lp + lm) - ep**2 / lm - em**2 / lp
    return float(Gamma_m * n_th * braces / (ep - em) ** 2)


def jump_ratio(Gamma_m) -> float:
    """Left limit over right limit of :func:`limit_phonon` at the jump point."""
    u = 1 + Gamma_m
    return 2 / u + 2 * (1 - Gamma_m) / u**2 + (1 - Gamma_m) ** 2 / u**3


@dataclass(frozen=True)
class PriorPrediction:
    gamma_opt: float
    n_m0: float
    alpha_sq: float
    A_minus: float
    A_plus: float
    n_mf_weak: float
    n_mf_strong: float


def _alpha_sq(params):
    k = params.kappa
    return (params.drive_E / k) ** 2 / (1 + (params.delta / k) ** 2)


def prior_weak_prediction(params: SystemParams) -> PriorPrediction:
    """Steady-state occupation of the rate-equation (spectrometer) picture.

    Damping terms enter as ``-kappa a`` and ``-gamma_m b`` here, which shifts
    numerical prefactors relative to formulas written with ``kappa/2``.
    """
    k, w = params.kappa, params.omega_m
    alpha_sq = _alpha_sq(params)
    g2a = params.g**2 * alpha_sq
    gamma_opt = (2 * g2a / k) / (1 + (k / (2 * w)) ** 2)
    n_m0 = (k / (2 * w)) ** 2
    two_gm = 2 * params.gamma_m
    if gamma_opt + two_gm > 0:
        n_weak = (gamma_opt * n_m0 + two_gm * params.n_th) / (gamma_opt + two_gm)
    else:
        n_weak = params.n_th
    return PriorPrediction(
        gamma_opt=gamma_opt,
        n_m0=n_m0,
        alpha_sq=alpha_sq,
        A_minus=g2a * 2 * k / (k**2 + (params.delta - w) ** 2),
        A_plus=g2a * 2 * k / (k**2 + (params.delta + w) ** 2),
        n_mf_weak=n_weak,
        n_mf_strong=prior_strong_prediction(params),
    )


def prior_strong_prediction(params: SystemParams) -> float:
    k, w = params.kappa, params.omega_m
    return k**2 / (4 * w**2) + params.g**2 * _alpha_sq(params) / (2 * w**2)


def bessel_jn(n_max, x) -> np.ndarray:
    """``J_0(x) .. J_{n_max}(x)`` by Miller's downward recurrence.

    Normalized with ``J_0 + 2 sum J_{2k} = 1``; intended for moderate ``|x|``.
    """
    n_max = int(n_max)
    x = float(x)
    out = np.zeros(n_max + 1)
    if x == 0:
        out[0] = 1.0
        return out
    ax = abs(x)
    if ax < 1e-8:
        # two-term power series; the recurrence would overflow here
        h = x / 2
        k = np.arange(n_max + 1)
        fact = np.cumprod(np.concatenate(([1.0], k[1:].astype(float))))
        return h ** k / fact * (1 - h * h / (k + 1))
    start = 2 * ((max(n_max, int(ax)) + int(np.sqrt(40 * max(n_max, ax, 1.0))) + 20) // 2)
    j_next, j_cur = 0.0, 1e-300
    vals = np.zeros(start + 1)
    vals[start] = j_cur
    for k in range(start, 0, -1):
        j_prev = 2 * k / ax * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            vals *= 1e-250
            j_next *= 1e-250
            j_cur *= 1e-250
        vals[k - 1] = j_cur
    norm = vals[0] + 2 * vals[2::2].sum()
    out[:] = vals[: n_max + 1] / norm
    if x < 0:
        out[1::2] *= -1
    return out


@dataclass(frozen=True)
class SidebandSeries:
    """Fourier components ``alpha_n`` of the classical cavity field."""

    orders: np.ndarray
    alpha: np.ndarray
    omega_m: float

    def __getitem__(self, n):
        return self.alpha[np.searchsorted(self.orders, n)]

    def field(self, t, orders=None):
        """``sum_n alpha_n exp(i n omega_m t)``, global phase dropped."""
        t = np.asarray(t, dtype=float)
        sel = slice(None) if orders is None else np.isin(self.orders, orders)
        ph = np.exp(1j * np.multiply.outer(t, self.orders[sel] * self.omega_m))
        return ph @ self.alpha[sel]

    def intensity(self, t, orders=(-1, 0, 1)):
        return np.abs(self.field(t, orders)) ** 2


def classical_sidebands(params: SystemParams, beta, n_max=5) -> SidebandSeries:
    """Sideband amplitudes of the cavity mean field under a mirror orbit.

    For the orbit ``beta (exp(-i w t) + exp(i w t))`` with real ``beta`` the
    steady field is ``exp(i phi(t)) sum_n alpha_n exp(i n w t)`` with
    ``alpha_n = E J_n(-2 g beta / w) / (i (n w + Delta) + kappa)`` and
    ``phi(t) = (2 g beta / w) sin(w t)``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    w = params.omega_m
    orders = np.arange(-n_max, n_max + 1)
    jn = bessel_jn(n_max, -2 * params.g * beta / w)
    j_all = jn[np.abs(orders)] * np.where((orders < 0) & (orders % 2 == 1), -1.0, 1.0)
    alpha = params.drive_E * j_all / (1j * (orders * w + params.delta) + params.kappa)
    return SidebandSeries(orders, alpha, w)


def mode_splitting(J, Gamma_m) -> float | None:
    """Normal-mode splitting ``sqrt(4 J^2 - (1 - Gamma_m)^2)``; None below strong coupling."""
    arg = 4 * J * J - (1 - Gamma_m) ** 2
    if arg < 0:
        return None
    return float(np.sqrt(arg))
