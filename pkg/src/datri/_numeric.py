"""Precision-generic array helpers.

Arrays are either float64 ndarrays or object ndarrays of ``mpmath.mpf``.
Everything built from ``+ - * @ einsum`` works unchanged on both; the few
operations that need a square root, an inverse or an eigen-solver go
through the helpers below. Extended-precision work must run inside
``precision(dps)`` because mpf arithmetic reads the global mpmath context.
"""

from __future__ import annotations

import contextlib

import mpmath
import numpy as np


def precision(dps):
    """Context manager fixing the mpmath working precision (no-op for None)."""
    if dps is None:
        return contextlib.nullcontext()
    return mpmath.workdps(dps)


def is_mp(a) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def to_mp(a) -> np.ndarray:
    """Convert to an object array of mpf (exact for binary floats)."""
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    flat = out.reshape(-1)
    for i, val in enumerate(a.reshape(-1)):
        flat[i] = mpmath.mpf(val)
    return out


def to_float(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        return np.array([float(z) for z in a.reshape(-1)]).reshape(a.shape)
    return a.astype(float)


def convert(a, dps):
    return to_mp(a) if dps is not None else np.asarray(a, dtype=float)


def zeros(shape, dps=None) -> np.ndarray:
    if dps is None:
        return np.zeros(shape)
    return to_mp(np.zeros(shape))


def eye(n, dps=None) -> np.ndarray:
    if dps is None:
        return np.eye(n)
    return to_mp(np.eye(n))


def sqrt(x):
    if isinstance(x, mpmath.mpf):
        return mpmath.sqrt(x)
    return np.sqrt(x)


def norm(v) -> float:
    """Euclidean norm of a vector or Frobenius norm of a matrix."""
    v = np.asarray(v)
    return sqrt(np.sum(v * v))


def inv(a) -> np.ndarray:
    if is_mp(a):
        m = mpmath.matrix(a.tolist())
        mi = mpmath.inverse(m)
        return np.array(mi.tolist(), dtype=object)
    return np.linalg.inv(a)


def det(a):
    if is_mp(a):
        return mpmath.det(mpmath.matrix(a.tolist()))
    return np.linalg.det(a)


def cholesky(a) -> np.ndarray:
    if is_mp(a):
        return np.array(mpmath.cholesky(mpmath.matrix(a.tolist())).tolist(), dtype=object)
    return np.linalg.cholesky(a)


def eigvalsh(a) -> np.ndarray:
    if is_mp(a):
        vals = mpmath.eigsy(mpmath.matrix(a.tolist()), eigvals_only=True)
        return np.array(sorted(vals), dtype=object)
    return np.linalg.eigvalsh(a)


def symmetrize(a) -> tuple[np.ndarray, float]:
    """Return ((A + A^T)/2, max|A - A^T|) for a square matrix."""
    skew = a - a.T
    asym = float(np.max(np.abs(skew))) if a.size else 0.0
    return (a + a.T) / 2, asym


def householder_frame(v) -> np.ndarray:
    """Orthonormal n x n matrix whose last column is the unit vector ``v``.

    Built from a Householder reflection sending the last standard basis
    vector to ``v`` (or to ``-v`` followed by a sign flip of the last column,
    whichever avoids cancellation); the first n-1 columns span the
    orthogonal complement of ``v``.
    """
    v = np.asarray(v)
    n = v.shape[0]
    dps = None if not is_mp(v) else mpmath.mp.dps
    e = zeros(n, dps)
    e[-1] = 1
    flip = v[-1] > 0
    u = e + v if flip else e - v
    uu = np.sum(u * u)
    frame = eye(n, dps) - 2 * np.outer(u, u) / uu
    if flip:
        frame[:, -1] = -frame[:, -1]
    return frame
