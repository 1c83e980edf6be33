"""Elementary symmetric functions, Newton's identities and truncated series.

Sign convention: ``det(lambda I - A) = lambda^d - s1 lambda^(d-1) + ... +
(-1)^d sd``, so every sigma_k of a positive operator is positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from . import _numeric as num
from .errors import InvalidInputError

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymOp:
    """Symmetric linear operator given by its matrix in an orthonormal basis."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidInputError(f"SymOp needs a non-empty square array, got shape {a.shape}")
        scale = float(np.max(np.abs(a)))
        if not np.isfinite(scale):
            raise InvalidInputError("SymOp entries must be finite")
        asym = float(np.max(np.abs(a - a.T)))
        if asym > SYMMETRY_RTOL * (1.0 + scale):
            raise InvalidInputError(f"SymOp not symmetric: max|A - A^T| = {asym:.3e}")
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "SymOp":
        return cls(np.eye(dim))

    @classmethod
    def symmetrized(cls, a) -> "SymOp":
        a = np.asarray(a)
        return cls((a + a.T) / 2)

    def trace(self):
        return np.trace(self.entries)

    def __matmul__(self, other):
        other = other.entries if isinstance(other, SymOp) else other
        return self.entries @ other

    def __repr__(self):
        return f"SymOp(dim={self.dim})"


def _entries(a) -> np.ndarray:
    return a.entries if isinstance(a, SymOp) else np.asarray(a)


@dataclass(frozen=True, eq=False)
class ScalarSeries:
    """Truncated power series c_0 + c_1 t + ... + c_N t^N."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 1 or c.size == 0:
            raise InvalidInputError("ScalarSeries needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def constant(cls, value, order: int) -> "ScalarSeries":
        real = isinstance(value, (int, float, np.integer, np.floating))
        c = np.zeros(order + 1, dtype=float if real else object)
        c[0] = value
        return cls(c)

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def _coerce(self, other) -> "ScalarSeries":
        if isinstance(other, ScalarSeries):
            return other
        return ScalarSeries.constant(other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        n = min(self.order, other.order) + 1
        return ScalarSeries(self.coeffs[:n] + other.coeffs[:n])

    __radd__ = __add__

    def __neg__(self):
        return ScalarSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, ScalarSeries):
            return ScalarSeries(self.coeffs * other)
        n = min(self.order, other.order) + 1
        out = np.convolve(self.coeffs[:n], other.coeffs[:n])[:n]
        return ScalarSeries(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, ScalarSeries):
            raise TypeError("series division is not provided")
        return ScalarSeries(self.coeffs / scalar)


@dataclass(frozen=True, eq=False)
class OperatorSeries:
    """Truncated power series with (d x d) operator coefficients.

    Coefficients are kept in product order; products of symmetric
    coefficients are generally not symmetric, so symmetry is not enforced.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim == 3 and c.shape[1] == c.shape[2] and c.shape[0] >= 1:
            object.__setattr__(self, "coeffs", c)
            return
        raise InvalidInputError(f"OperatorSeries needs shape (N+1, d, d), got {c.shape}")

    @classmethod
    def from_ops(cls, ops: Sequence) -> "OperatorSeries":
        mats = [_entries(a) for a in ops]
        dims = {m.shape for m in mats}
        if len(dims) != 1:
            raise InvalidInputError(f"coefficient dims differ: {sorted(dims)}")
        return cls(np.stack(mats))

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def __call__(self, t) -> np.ndarray:
        out = self.coeffs[-1]
        for c in self.coeffs[-2::-1]:
            out = out * t + c
        return out

    def trace(self) -> ScalarSeries:
        return ScalarSeries(np.trace(self.coeffs, axis1=1, axis2=2))

    def __matmul__(self, other: "OperatorSeries") -> "OperatorSeries":
        return series_product(self, other)


def elementary_symmetric(a) -> np.ndarray:
    """sigma_1..sigma_d of a symmetric operator, from its eigenvalues.

    >>> elementary_symmetric(np.diag([1.0, 2.0, 3.0]))
    array([ 6., 11.,  6.])
    """
    m = _entries(a)
    if m.dtype != object and not np.all(np.isfinite(m)):
        raise InvalidInputError("operator has non-finite entries")
    try:
        lam = num.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError(f"eigen-decomposition failed: {exc}") from exc
    d = len(lam)
    # e[j] accumulates sigma_j of the eigenvalues processed so far
    e = [1] + [0] * d
    for x in lam:
        for j in range(d, 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return np.array(e[1:], dtype=object if m.dtype == object else float)


def power_sums(a, kmax: int) -> np.ndarray:
    """s_l = tr(A^l) for l = 1..kmax by repeated multiplication."""
    if kmax < 1:
        raise InvalidInputError("kmax must be >= 1")
    m = _entries(a)
    out = []
    p = m
    for _ in range(kmax):
        out.append(np.trace(p))
        p = p @ m
    return np.array(out, dtype=m.dtype)


def newton_from_power_sums(s: Sequence, n: int | None = None) -> list:
    """Solve Newton's identities for sigma_1..sigma_k given s_1..s_k.

    The entries of ``s`` may be numbers or ``ScalarSeries``; the recursion
    only uses ring operations and division by integers.
    """
    s = list(s)
    if not s:
        raise InvalidInputError("power-sum list is empty")
    if n is not None and len(s) > n:
        raise InvalidInputError(f"{len(s)} power sums given for dimension {n}")
    sig = []
    for k in range(1, len(s) + 1):
        # s_k - s_{k-1} sig_1 + ... + (-1)^{k-1} s_1 sig_{k-1} + (-1)^k k sig_k = 0
        acc = s[k - 1]
        for i in range(1, k):
            term = s[k - 1 - i] * sig[i - 1]
            acc = acc - term if i % 2 else acc + term
        sig.append(acc / k if k % 2 else -acc / k)
    return sig


def series_product(s1: OperatorSeries, s2: OperatorSeries) -> OperatorSeries:
    """Ordered Cauchy product truncated to the smaller order."""
    if s1.dim != s2.dim:
        raise InvalidInputError(f"dimension mismatch: {s1.dim} vs {s2.dim}")
    n = min(s1.order, s2.order) + 1
    a, b = s1.coeffs, s2.coeffs
    out = [sum(a[i] @ b[k - i] for i in range(k + 1)) for k in range(n)]
    return OperatorSeries(np.stack(out))


def sigma_series(c: OperatorSeries, k: int) -> ScalarSeries:
    """Series of sigma_k(C(t)) through the order of ``c``.

    Power sums tr(C(t)^l), l = 1..k, are formed as scalar series and fed
    through Newton's identities coefficient-wise.
    """
    d = c.dim
    if not 1 <= k <= d:
        raise InvalidInputError(f"k={k} outside 1..{d}")
    a0 = num.to_float(c.coeffs[0])
    if np.max(np.abs(a0 - np.eye(d))) > 1e-12:
        raise InvalidInputError("leading coefficient must be the identity")
    sums = []
    p = c
    for _ in range(k):
        sums.append(p.trace())
        p = series_product(p, c)
    return newton_from_power_sums(sums)[k - 1]


def sigma_identity_shift(d: int, k: int, trace_a, rl) -> float:
    """Two-term expansion C(d,k) + C(d-1,k-1) r^l tr A of sigma_k(Id + r^l A)."""
    return comb(d, k) + comb(d - 1, k - 1) * rl * trace_a
