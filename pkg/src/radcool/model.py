"""Time-dependent ingredients of the linearized optomechanical dynamics.

All rates are measured in units of the cavity damping rate ``kappa`` (which is
therefore exactly 1) and times in units of ``1/kappa``.  Operators are ordered
as ``c = (a, a^dag, b, b^dag)`` throughout the package.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidParameterError",
    "SystemParams",
    "DimensionlessParams",
    "NoiseMoments",
    "SWAP",
    "WEAK_COUPLING_LIMIT",
    "dimensionless",
    "drive_kernel",
    "dynamical_matrix",
    "coherent_drive",
    "noise_moments",
    "solve_for_J",
]

# g/omega_m above this leaves the regime where the cubic term may be dropped
WEAK_COUPLING_LIMIT = 1e-3
SERIES_THRESHOLD = 1e-6

# Permutation a <-> a^dag, b <-> b^dag.
SWAP = np.array(
    [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float
)


class InvalidParameterError(ValueError):
    """Raised for parameter sets outside the model's domain."""


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of a driven optomechanical system in kappa units.

    Parameters
    ----------
    g : float
        Single-photon optomechanical coupling.
    gamma_m : float
        Mechanical damping rate.
    omega_m : float
        Mechanical frequency, strictly positive.
    delta : float
        Drive detuning ``omega_c - omega_l``; any sign is allowed.
    drive_E : float
        Drive intensity ``E``.
    n_th : float
        Thermal occupation of the mechanical reservoir (and initial state).
    kappa : float
        Cavity damping rate; fixed to 1.
    """

    g: float
    gamma_m: float
    omega_m: float
    delta: float
    drive_E: float
    n_th: float
    kappa: float = 1.0

    def __post_init__(self):
        problems = []
        if self.kappa != 1.0:
            problems.append("kappa must be exactly 1 (kappa-normalized units)")
        for name in ("g", "gamma_m", "omega_m", "delta", "drive_E", "n_th"):
            if not np.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        for name in ("g", "gamma_m", "drive_E", "n_th"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if not self.omega_m > 0:
            problems.append("omega_m must be > 0")
        if problems:
            raise InvalidParameterError("; ".join(problems))

    @classmethod
    def from_J(cls, J, *, omega_m, gamma_m, n_th, g=1e-5, delta=None):
        """Build parameters from the effective coupling ``J = (g/omega_m) E``.

        The drive intensity is solved for at fixed ``g``; ``delta`` defaults
        to the beam-splitter resonance ``omega_m``.  Use :func:`solve_for_J`
        to realize ``J`` through ``g`` instead.
        """
        if delta is None:
            delta = omega_m
        if g <= 0:
            raise InvalidParameterError("g must be > 0 to realize J by the drive")
        return cls(g=g, gamma_m=gamma_m, omega_m=omega_m, delta=delta,
                   drive_E=J * omega_m / g, n_th=n_th)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @property
    def J(self) -> float:
        return self.g * self.drive_E / self.omega_m

    @property
    def valid(self) -> bool:
        """True inside the weak-coupling regime ``g/omega_m <= 1e-3``."""
        return self.g / self.omega_m <= WEAK_COUPLING_LIMIT


def solve_for_J(params: SystemParams, J: float, vary: str = "E") -> SystemParams:
    """Return a copy of ``params`` whose effective coupling equals ``J``.

    ``vary`` selects which rate absorbs the change: the drive intensity
    (``"E"``) or the single-photon coupling (``"g"``).
    """
    if vary == "E":
        if params.g == 0:
            raise InvalidParameterError("cannot realize J by E when g = 0")
        return params.replace(drive_E=J * params.omega_m / params.g)
    if vary == "g":
        if params.drive_E == 0:
            raise InvalidParameterError("cannot realize J by g when E = 0")
        return params.replace(g=J * params.omega_m / params.drive_E)
    raise ValueError(f"vary must be 'E' or 'g', got {vary!r}")


@dataclass(frozen=True)
class DimensionlessParams:
    J: float
    G_m: float
    calE: float
    s_m: float
    Q: float
    delta_rel: float
    Gamma_m: float


def dimensionless(params: SystemParams) -> DimensionlessParams:
    """Dimensionless groups ``J, g/kappa, E/kappa, omega_m/kappa, ...``."""
    if params.omega_m == 0 or params.gamma_m == 0:
        raise InvalidParameterError("omega_m and gamma_m must be nonzero")
    k = params.kappa
    s_m = params.omega_m / k
    G_m = params.g / k
    calE = params.drive_E / k
    return DimensionlessParams(
        J=G_m * calE / s_m,
        G_m=G_m,
        calE=calE,
        s_m=s_m,
        Q=params.omega_m / params.gamma_m,
        delta_rel=params.delta / params.omega_m,
        Gamma_m=params.gamma_m / k,
    )


def drive_kernel(t, delta):
    """``f(t) = (exp(i delta t) - 1) / delta``, continuous through ``delta = 0``.

    For ``|delta t| < 1e-6`` the three-term Taylor series is used.
    """
    t = np.asarray(t, dtype=float)
    x = delta * t
    series = 1j * t * (1 + 0.5j * x - x * x / 6)
    if delta == 0:
        out = series
    else:
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            exact = np.expm1(1j * x) / delta
        out = np.where(np.abs(x) < SERIES_THRESHOLD, series, exact)
    return out[()] if out.ndim == 0 else out


def dynamical_matrix(params: SystemParams, t):
    """Dynamical matrix ``M(t)``; vectorized over ``t`` (shape ``t.shape + (4, 4)``)."""
    t = np.asarray(t, dtype=float)
    f = drive_kernel(t, params.delta)
    gE = params.g * params.drive_E
    ep = np.exp(1j * params.omega_m * t)
    em = np.conj(ep)
    fc = np.conj(f)

    M = np.zeros(t.shape + (4, 4), dtype=complex)
    M[..., 0, 0] = M[..., 1, 1] = -params.kappa
    M[..., 2, 2] = M[..., 3, 3] = -params.gamma_m
    M[..., 0, 2] = gE * f * em
    M[..., 0, 3] = gE * f * ep
    M[..., 1, 2] = gE * fc * em
    M[..., 1, 3] = gE * fc * ep
    M[..., 2, 0] = -gE * fc * ep
    M[..., 2, 1] = gE * f * ep
    M[..., 3, 0] = gE * fc * em
    M[..., 3, 1] = -gE * f * em
    return M


def coherent_drive(params: SystemParams, t):
    """Coherent drive vector ``lambda(t)``; vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    fE = drive_kernel(t, params.delta) * params.drive_E
    lam_m = 1j * params.g * np.abs(fE) ** 2 * np.exp(1j * params.omega_m * t)
    lam = np.empty(t.shape + (4,), dtype=complex)
    lam[..., 0] = 1j * params.kappa * fE
    lam[..., 1] = np.conj(lam[..., 0])
    lam[..., 2] = lam_m
    lam[..., 3] = np.conj(lam_m)
    return lam


@dataclass(frozen=True)
class NoiseMoments:
    """Delta-correlated noise moments ``<eta_i(t) eta_j(t')> = N_ij delta(t - t')``."""

    N: np.ndarray

    def sources(self) -> dict:
        """Split into the three single-entry sources (exact by linearity).

        Keys: ``"cav"`` (entry 12, cavity vacuum noise), ``"bs"`` (entry 43,
        mechanical noise entering through the beam-splitter channel) and
        ``"sq"`` (entry 34, mechanical noise through the squeezing channel).
        """
        out = {}
        for key, (i, j) in (("cav", (0, 1)), ("bs", (3, 2)), ("sq", (2, 3))):
            part = np.zeros((4, 4), dtype=complex)
            part[i, j] = self.N[i, j]
            out[key] = part
        return out


def noise_moments(params: SystemParams) -> NoiseMoments:
    N = np.zeros((4, 4), dtype=complex)
    N[0, 1] = 2 * params.kappa
    N[2, 3] = 2 * params.gamma_m * (params.n_th + 1)
    N[3, 2] = 2 * params.gamma_m * params.n_th
    return NoiseMoments(N)
