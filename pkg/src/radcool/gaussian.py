"""Gaussian states of the cavity and mechanical modes.

Quadratures are ``q = (c + c^dag)/sqrt(2)`` and ``p = (c - c^dag)/(i sqrt(2))``
ordered ``(q_c, p_c, q_m, p_m)``.  The covariance is the symmetrized one,
``sigma_ij = <{dx_i, dx_j}>/2``, so the vacuum has ``sigma = I/2``, a thermal
mode of occupation ``n`` has ``sigma = (n + 1/2) I`` and its Wigner function at
the origin is ``1/(pi (1 + 2n))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .propagator import SecondMoments

__all__ = [
    "InconsistentMomentsError",
    "DegenerateStateError",
    "GaussianState",
    "to_gaussian",
    "wigner",
    "wigner_grid",
    "purity",
    "thermal_occupation",
    "symplectic_form",
]

_S2 = 1 / np.sqrt(2)
# rows map (a, a^dag, b, b^dag) to (q_c, p_c, q_m, p_m)
_T = np.array([
    [_S2, _S2, 0, 0],
    [-1j * _S2, 1j * _S2, 0, 0],
    [0, 0, _S2, _S2],
    [0, 0, -1j * _S2, 1j * _S2],
])

_SLICES = {"full": slice(0, 4), "cavity": slice(0, 2), "mechanical": slice(2, 4)}


class InconsistentMomentsError(ValueError):
    pass


class DegenerateStateError(ValueError):
    pass


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if not np.allclose(sigma, sigma.T, atol=1e-10 * max(1.0, np.abs(sigma).max())):
            raise InconsistentMomentsError("covariance is not symmetric")
        n = sigma.shape[0] // 2
        ev = np.linalg.eigvalsh(sigma + 0.5j * symplectic_form(n))
        if ev.min() < -1e-8 * max(1.0, np.abs(sigma).max()):
            raise InconsistentMomentsError("covariance violates the uncertainty relation")

    def block(self, mode="full") -> "GaussianState":
        """Reduced state of one mode (exact marginal for Gaussian states)."""
        sl = _SLICES[mode]
        return GaussianState(np.asarray(self.mean)[sl], np.asarray(self.sigma)[sl, sl])

    def displaced(self, shift) -> "GaussianState":
        return GaussianState(np.asarray(self.mean) + shift, self.sigma)


def to_gaussian(moments, mean4=None, tol=1e-6) -> GaussianState:
    """Build the two-mode Gaussian state from operator moments.

    ``moments`` is a :class:`SecondMoments` or a raw 4x4 matrix of centered
    moments ``<dc_i dc_j>``; ``mean4`` the complex means ``<c_i>``.
    """
    G = moments.G if isinstance(moments, SecondMoments) else np.asarray(moments)
    res = max(abs(G[0, 1] - G[1, 0] - 1), abs(G[2, 3] - G[3, 2] - 1))
    if res > tol * max(1.0, np.abs(G).max() * 1e-9):
        raise InconsistentMomentsError(f"commutators violated by {res:.3g}")
    V = 0.5 * (G + G.T)
    sigma = (_T @ V @ _T.T).real
    sigma = 0.5 * (sigma + sigma.T)
    mean = np.zeros(4) if mean4 is None else (_T @ np.asarray(mean4)).real
    return GaussianState(mean, sigma)


def wigner(state: GaussianState, points, mode="full"):
    """Wigner function at ``points`` (shape ``(..., 2n)``) of the selected modes."""
    st = state.block(mode)
    sigma = np.asarray(st.sigma)
    det = np.linalg.det(sigma)
    if not det > 0:
        raise DegenerateStateError("covariance is singular")
    dim = sigma.shape[0]
    x = np.asarray(points, dtype=float) - st.mean
    if x.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim} for mode {mode!r}")
    quad = np.einsum("...i,ij,...j->...", x, np.linalg.inv(sigma), x)
    return np.exp(-0.5 * quad) / ((2 * np.pi) ** (dim // 2) * np.sqrt(det))


def wigner_grid(state: GaussianState, q, p, mode="mechanical"):
    """Single-mode Wigner function on the grid ``q x p``; returns ``W[i, j]`` at ``(q_i, p_j)``."""
    if mode == "full":
        raise ValueError("wigner_grid works on a single mode")
    Q, P = np.meshgrid(q, p, indexing="ij")
    return wigner(state, np.stack([Q, P], axis=-1), mode)


def purity(state: GaussianState, mode="full") -> float:
    sigma = np.asarray(state.block(mode).sigma)
    n = sigma.shape[0] // 2
    return float(1 / (2 ** n * np.sqrt(np.linalg.det(sigma))))


def thermal_occupation(state: GaussianState, mode="mechanical") -> float:
    """Occupation of the thermal state with the same purity, ``sqrt(det sigma) - 1/2``."""
    if mode == "full":
        raise ValueError("thermal_occupation works on a single mode")
    return float(np.sqrt(np.linalg.det(state.block(mode).sigma)) - 0.5)
