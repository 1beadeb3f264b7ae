"""Time-ordered transition matrices and moment propagation.

The production path advances, step by step, the transition matrix ``D(t, 0)``,
the first moments and one second-moment matrix per noise source.  Over a step
the generator is frozen at the interval midpoint, so ``midpoint_exp`` uses
``S = exp(M dt)`` and integrates the noise and drive inside the step with
Simpson's rule on the exact in-step propagator; ``euler_product`` uses
``S = I + M dt`` with rectangle-rule source terms.

``history_noise_oracle`` evaluates the noise integrals the other way round:
it builds ``D(t, tau)`` for every ``tau`` by multiplying step matrices backwards
from ``t`` and integrates the squared matrix elements over ``tau``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.integrate import simpson

from .linalg import expm
from .model import SystemParams, coherent_drive, dynamical_matrix, noise_moments

__all__ = [
    "Scheme",
    "DivergenceError",
    "StepSizeError",
    "OffGridError",
    "TransitionGrid",
    "SecondMoments",
    "MomentSeries",
    "MeanTrajectory",
    "Propagation",
    "HistoryIntegrals",
    "default_step",
    "initial_second_moments",
    "step_matrix",
    "simulate",
    "evolve_transition",
    "transition_between",
    "evolve_second_moments",
    "evolve_mean",
    "history_noise_oracle",
]

CHUNK = 1 << 15
COMMUTATOR_TOL = 1e-6


class Scheme(str, enum.Enum):
    EULER_PRODUCT = "euler_product"
    MIDPOINT_EXP = "midpoint_exp"


class DivergenceError(RuntimeError):
    """Non-finite values appeared; ``t_bad`` is the first offending time."""

    def __init__(self, t_bad, partial=None):
        super().__init__(f"propagation diverged at kappa*t = {t_bad:.6g}")
        self.t_bad = t_bad
        self.partial = partial


class StepSizeError(RuntimeError):
    pass


class OffGridError(ValueError):
    pass


def default_step(params: SystemParams) -> float:
    """Step resolving the fastest phase factor with 64 points per period."""
    w_max = max(2 * params.omega_m, abs(params.delta) + params.omega_m, params.kappa)
    return min(2 * np.pi / (64 * w_max), 1e-2) / params.kappa


def initial_second_moments(params: SystemParams) -> np.ndarray:
    """Cavity vacuum times mechanical thermal state."""
    G0 = np.zeros((4, 4), dtype=complex)
    G0[0, 1] = 1.0
    G0[2, 3] = params.n_th + 1
    G0[3, 2] = params.n_th
    return G0


def step_matrix(M_eval, dt, scheme=Scheme.MIDPOINT_EXP):
    """One-step propagator for a generator held fixed over ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    scheme = Scheme(scheme)
    M_eval = np.asarray(M_eval)
    if scheme is Scheme.EULER_PRODUCT:
        return np.eye(4) + M_eval * dt
    return expm(M_eval * dt)


def _n_steps(t_end, dt):
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    n = int(round(t_end / dt))
    if abs(n * dt - t_end) > 1e-9 * t_end:
        n = int(np.ceil(t_end / dt))
    return max(n, 1)


def _step_blocks(params, dt, scheme, k0, k1, with_drive=True, chunk=CHUNK):
    """Yield ``(k_start, S, Sh, lam0, lamh, lam1)`` for steps ``k0 .. k1-1``."""
    for a in range(k0, k1, chunk):
        k = np.arange(a, min(a + chunk, k1))
        M = dynamical_matrix(params, (k + 0.5) * dt)
        if scheme is Scheme.MIDPOINT_EXP:
            Sh = expm(M * (0.5 * dt))
            S = Sh @ Sh
        else:
            S = np.eye(4) + M * dt
            Sh = S
        if with_drive:
            lam0 = coherent_drive(params, k * dt)
            lamh = coherent_drive(params, (k + 0.5) * dt)
            lam1 = coherent_drive(params, (k + 1) * dt)
        else:
            lam0 = lamh = lam1 = np.zeros((len(k), 4), dtype=complex)
        yield a, S, Sh, lam0, lamh, lam1


@njit(cache=True)
def _sandwich(A, X, out):
    # out = A @ X @ A.T
    tmp = np.zeros((4, 4), dtype=np.complex128)
    for i in range(4):
        for j in range(4):
            acc = 0j
            for m in range(4):
                acc += A[i, m] * X[m, j]
            tmp[i, j] = acc
    for i in range(4):
        for j in range(4):
            acc = 0j
            for m in range(4):
                acc += tmp[i, m] * A[j, m]
            out[i, j] = acc


@njit(cache=True)
def _advance(S, Sh, lam0, lamh, lam1, dt, simpson_rule, want_mean,
             D, G, Nsrc, c, k0, stride, n_total, outD, outG, outc, pos):
    """Advance one block of steps; returns (next store position, bad step or -1)."""
    P = G.shape[0]
    tmpD = np.zeros((4, 4), dtype=np.complex128)
    X = np.zeros((4, 4), dtype=np.complex128)
    Y = np.zeros((4, 4), dtype=np.complex128)
    cn = np.zeros(4, dtype=np.complex128)
    for s in range(S.shape[0]):
        Sk = S[s]
        for i in range(4):
            for j in range(4):
                acc = 0j
                for m in range(4):
                    acc += Sk[i, m] * D[m, j]
                tmpD[i, j] = acc
        D[:, :] = tmpD
        for p in range(P):
            if simpson_rule:
                for i in range(4):
                    for j in range(4):
                        X[i, j] = G[p, i, j] + (dt / 6.0) * Nsrc[p, i, j]
                _sandwich(Sk, X, Y)
                _sandwich(Sh[s], Nsrc[p], X)
                for i in range(4):
                    for j in range(4):
                        G[p, i, j] = (Y[i, j] + (4.0 * dt / 6.0) * X[i, j]
                                      + (dt / 6.0) * Nsrc[p, i, j])
            else:
                _sandwich(Sk, G[p], Y)
                for i in range(4):
                    for j in range(4):
                        G[p, i, j] = Y[i, j] + dt * Nsrc[p, i, j]
        if want_mean:
            for i in range(4):
                acc = 0j
                acc2 = 0j
                acc3 = 0j
                for m in range(4):
                    acc += Sk[i, m] * c[m]
                    acc2 += Sk[i, m] * lam0[s, m]
                    acc3 += Sh[s, i, m] * lamh[s, m]
                if simpson_rule:
                    cn[i] = acc + (dt / 6.0) * (acc2 + 4.0 * acc3 + lam1[s, i])
                else:
                    cn[i] = acc + dt * lamh[s, i]
            c[:] = cn
        finite = True
        for i in range(4):
            for j in range(4):
                if not np.isfinite(D[i, j]):
                    finite = False
                for p in range(P):
                    if not np.isfinite(G[p, i, j]):
                        finite = False
        if not finite:
            return pos, k0 + s + 1
        k = k0 + s + 1
        if k % stride == 0 or k == n_total:
            outD[pos] = D
            outG[pos] = G
            outc[pos] = c
            pos += 1
    return pos, -1


@njit(cache=True)
def _chain(S, D):
    """D <- S[n-1] ... S[0] D, in place."""
    tmp = np.zeros((4, 4), dtype=np.complex128)
    for s in range(S.shape[0]):
        for i in range(4):
            for j in range(4):
                acc = 0j
                for m in range(4):
                    acc += S[s, i, m] * D[m, j]
                tmp[i, j] = acc
        D[:, :] = tmp


@njit(cache=True)
def _chain_vector(S, x, out, pos, stride, k0):
    """x <- S[s] x step by step, storing every ``stride``-th global step."""
    tmp = np.zeros(4, dtype=np.complex128)
    for s in range(S.shape[0]):
        for i in range(4):
            acc = 0j
            for m in range(4):
                acc += S[s, i, m] * x[m]
            tmp[i] = acc
        x[:] = tmp
        if (k0 + s + 1) % stride == 0:
            out[pos] = x
            pos += 1
    return pos


@njit(cache=True)
def _backward_history(S, R, rows):
    """Right-multiply ``R`` by ``S[n-1], ..., S[0]``, recording ``R`` after each.

    ``rows[j]`` receives ``R`` as it stands after multiplying down to step j,
    i.e. ``D(t, tau_j)`` when ``R`` starts as ``D(t, tau_n)``.
    """
    tmp = np.zeros((4, 4), dtype=np.complex128)
    n = S.shape[0]
    for s in range(n - 1, -1, -1):
        for i in range(4):
            for j in range(4):
                acc = 0j
                for m in range(4):
                    acc += R[i, m] * S[s, m, j]
                tmp[i, j] = acc
        R[:, :] = tmp
        rows[s] = R


@dataclass(frozen=True)
class SecondMoments:
    """Centered moments ``G_ij = <dc_i dc_j>`` at time ``t``."""

    G: np.ndarray
    t: float

    @property
    def phonon_number(self) -> float:
        return float(self.G[3, 2].real)

    @property
    def photon_number(self) -> float:
        return float(self.G[1, 0].real)

    @property
    def commutator_residual(self) -> float:
        return float(max(abs(self.G[0, 1] - self.G[1, 0] - 1),
                         abs(self.G[2, 3] - self.G[3, 2] - 1)))


@dataclass(frozen=True)
class TransitionGrid:
    params: SystemParams
    t_grid: np.ndarray
    step: float
    D0: np.ndarray
    scheme: Scheme
    stride: int = 1

    def index_of(self, t) -> int:
        """Global step index of a stored grid time; raises for off-grid times."""
        k = int(round(t / self.step))
        stored = np.isclose(self.t_grid, t, rtol=0, atol=1e-9 * max(1.0, abs(t)))
        if not stored.any() or abs(k * self.step - t) > 1e-9 * max(1.0, abs(t)):
            raise OffGridError(f"t = {t!r} is not a stored grid time")
        return k


@dataclass(frozen=True)
class MomentSeries:
    """Second moments on the stored grid.

    ``parts`` holds the system-operator part (``"sys"``) and one matrix series
    per noise source (``"cav"``, ``"bs"``, ``"sq"``); ``G`` is their sum.
    """

    t: np.ndarray
    G: np.ndarray
    parts: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k) -> SecondMoments:
        return SecondMoments(self.G[k], float(self.t[k]))

    @property
    def noise(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return sum(v for k, v in self.parts.items() if k != "sys")


@dataclass(frozen=True)
class MeanTrajectory:
    t: np.ndarray
    c_mean: np.ndarray

    @property
    def q_m0(self):
        return np.sqrt(2) * self.c_mean[:, 2].real

    @property
    def p_m0(self):
        return np.sqrt(2) * self.c_mean[:, 2].imag


@dataclass(frozen=True)
class Propagation:
    """Everything produced by one pass of :func:`simulate`."""

    grid: TransitionGrid
    moments: MomentSeries
    mean: MeanTrajectory | None
    diverged_at: float | None = None


def simulate(params, t_end, step=None, scheme=Scheme.MIDPOINT_EXP, *,
             sample_every=None, sources=None, want_mean=True, raise_on_divergence=True):
    """Propagate ``D(t, 0)``, per-source second moments and means together.

    Parameters
    ----------
    sources : dict, optional
        Noise matrices to propagate separately; defaults to the three
        single-entry sources of :meth:`NoiseMoments.sources`.
    sample_every : float, optional
        Spacing of stored samples in ``1/kappa``; every step by default.
    raise_on_divergence : bool
        If False, a diverging run returns the samples before the bad step with
        ``diverged_at`` set.
    """
    scheme = Scheme(scheme)
    dt = default_step(params) if step is None else float(step)
    n_total = _n_steps(t_end, dt)
    stride = 1 if sample_every is None else max(1, int(round(sample_every / dt)))
    if sources is None:
        sources = noise_moments(params).sources()
    names = list(sources)
    Nsrc = np.array([sources[k] for k in names], dtype=complex).reshape(-1, 4, 4)

    n_store = 1 + n_total // stride + (1 if n_total % stride else 0)
    outD = np.empty((n_store, 4, 4), dtype=complex)
    outG = np.empty((n_store, len(names), 4, 4), dtype=complex)
    outc = np.empty((n_store, 4), dtype=complex)
    D = np.eye(4, dtype=complex)
    G = np.zeros((len(names), 4, 4), dtype=complex)
    c = np.zeros(4, dtype=complex)
    outD[0], outG[0], outc[0] = D, G, c
    pos = 1
    bad = -1
    simpson_rule = scheme is Scheme.MIDPOINT_EXP
    for k0, S, Sh, lam0, lamh, lam1 in _step_blocks(params, dt, scheme, 0, n_total,
                                                    with_drive=want_mean):
        pos, bad = _advance(S, Sh, lam0, lamh, lam1, dt, simpson_rule, want_mean,
                            D, G, Nsrc, c, k0, stride, n_total, outD, outG, outc, pos)
        if bad >= 0:
            break

    idx = np.arange(n_store) * stride
    idx[-1] = n_total
    t = idx[:pos] * dt
    D0 = outD[:pos]
    G0 = initial_second_moments(params)
    with np.errstate(over="ignore", invalid="ignore"):
        parts = {"sys": D0 @ G0 @ np.swapaxes(D0, -1, -2)}
        for i, name in enumerate(names):
            parts[name] = outG[:pos, i]
        total = sum(parts.values())

    grid = TransitionGrid(params, t, dt, D0, scheme, stride)
    moments = MomentSeries(t, total, parts)
    mean = MeanTrajectory(t, outc[:pos]) if want_mean else None
    out = Propagation(grid, moments, mean, None if bad < 0 else bad * dt)
    if bad >= 0 and raise_on_divergence:
        raise DivergenceError(bad * dt, out)
    return out


def evolve_transition(params, t_end, step=None, scheme=Scheme.MIDPOINT_EXP, *,
                      sample_every=None) -> TransitionGrid:
    """Grid of ``D(t_k, 0)`` built from time-ordered step products."""
    return simulate(params, t_end, step, scheme, sample_every=sample_every,
                    sources={}, want_mean=False).grid


def transition_between(grid: TransitionGrid, t, tau) -> np.ndarray:
    """``D(t, tau)`` by restepping from ``tau`` to ``t`` (never by inversion)."""
    if tau > t:
        raise ValueError("need tau <= t")
    k_t = grid.index_of(t)
    k_tau = grid.index_of(tau)
    D = np.eye(4, dtype=complex)
    for _, S, *_ in _step_blocks(grid.params, grid.step, grid.scheme, k_tau, k_t,
                                 with_drive=False):
        _chain(S, D)
    return D


def evolve_second_moments(params, t_end, step=None, scheme=Scheme.MIDPOINT_EXP, *,
                          sample_every=None, split=True) -> MomentSeries:
    """Second moments from ``dG/dt = M G + G M^T + N`` starting from vacuum x thermal.

    With ``split=True`` each noise source is propagated separately (exact by
    linearity); otherwise the full ``N`` is carried as a single ``"noise"`` part.
    """
    sources = None if split else {"noise": noise_moments(params).N}
    moments = simulate(params, t_end, step, scheme, sample_every=sample_every,
                       sources=sources, want_mean=False).moments
    check_commutators(moments)
    return moments


def check_commutators(moments: MomentSeries, tol=COMMUTATOR_TOL):
    G = moments.G
    res = np.maximum(np.abs(G[:, 0, 1] - G[:, 1, 0] - 1), np.abs(G[:, 2, 3] - G[:, 3, 2] - 1))
    scale = np.maximum(1.0, np.abs(G).max(axis=(1, 2)) * 1e-9)
    bad = np.nonzero(res > tol * scale)[0]
    if bad.size:
        k = bad[0]
        raise StepSizeError(
            f"commutator drifted by {res[k]:.3g} at kappa*t = {moments.t[k]:.6g}; "
            "refine the step"
        )


def evolve_mean(params, grid: TransitionGrid) -> MeanTrajectory:
    """First moments driven by ``lambda(t)`` from zero initial means."""
    t_end = grid.t_grid[-1]
    return simulate(params, t_end, grid.step, grid.scheme, sources={},
                    sample_every=grid.stride * grid.step).mean


@dataclass(frozen=True)
class HistoryIntegrals:
    """Noise integrals evaluated directly over the history ``tau in [0, t]``.

    ``phonon`` holds the three terms of the noise phonon number keyed
    ``"cav"``, ``"bs"``, ``"sq"``; ``photon`` holds the matching photon terms.
    """

    t: float
    phonon: dict
    photon: dict

    @property
    def phonon_total(self):
        return sum(self.phonon.values())

    @property
    def photon_total(self):
        return sum(self.photon.values())


def history_noise_oracle(params, t, step=None, scheme=Scheme.MIDPOINT_EXP) -> HistoryIntegrals:
    """Direct quadrature over ``tau`` of restepped ``d_ij(t, tau)``.

    Costs one backward sweep of step products and keeps every ``D(t, tau_j)``;
    meant for short validation runs.
    """
    scheme = Scheme(scheme)
    dt = default_step(params) if step is None else float(step)
    n = _n_steps(t, dt) if t > 0 else 0
    if n == 0:
        zero = {"cav": 0.0, "bs": 0.0, "sq": 0.0}
        return HistoryIntegrals(0.0, dict(zero), dict(zero))

    rows = np.empty((n + 1, 4, 4), dtype=complex)
    rows[n] = np.eye(4)
    R = np.eye(4, dtype=complex)
    blocks = list(_step_blocks(params, dt, scheme, 0, n, with_drive=False))
    for k0, S, *_ in reversed(blocks):
        _backward_history(S, R, rows[k0:k0 + len(S)])

    kap, gam, nth = params.kappa, params.gamma_m, params.n_th
    d = rows
    integrand_ph = {
        "cav": 2 * kap * np.abs(d[:, 3, 0]) ** 2,
        "bs": 2 * gam * nth * np.abs(d[:, 3, 3]) ** 2,
        "sq": 2 * gam * (nth + 1) * np.abs(d[:, 3, 2]) ** 2,
    }
    integrand_pt = {
        "cav": 2 * kap * (d[:, 1, 0] * d[:, 0, 1]).real,
        "bs": 2 * gam * nth * (d[:, 1, 3] * d[:, 0, 2]).real,
        "sq": 2 * gam * (nth + 1) * (d[:, 1, 2] * d[:, 0, 3]).real,
    }
    taus = np.arange(n + 1) * dt
    quad = {k: float(simpson(v, x=taus)) for k, v in integrand_ph.items()}
    quad_pt = {k: float(simpson(v, x=taus)) for k, v in integrand_pt.items()}
    return HistoryIntegrals(n * dt, quad, quad_pt)
