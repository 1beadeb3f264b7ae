"""Batched exponential of small dense complex matrices.

Scaling and squaring around a diagonal [7/7] Pade approximant, vectorized over
leading axes so that a whole block of 4x4 step generators is exponentiated at
once.
"""

import numpy as np

__all__ = ["expm"]

# Pade [7/7] coefficients and the 1-norm bound below which it is accurate to
# double precision (Higham 2005, theta_7).
_B7 = (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0)
_THETA7 = 0.9504178996162932


def expm(A):
    """Matrix exponential of ``A`` with shape ``(..., n, n)``."""
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expm expects square matrices in the last two axes")
    batch = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape((-1, n, n)).astype(complex if np.iscomplexobj(A) else float)

    norm1 = np.abs(A).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        s = np.ceil(np.log2(norm1 / _THETA7))
    s = np.where(np.isfinite(s) & (s > 0), s, 0).astype(int)
    A = A / (2.0 ** s)[:, None, None]

    ident = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    b = _B7
    U = A @ (b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    R = np.linalg.solve(V - U, V + U)

    for k in range(int(s.max(initial=0))):
        sel = s > k
        R[sel] = R[sel] @ R[sel]
    return R.reshape(batch + (n, n))
