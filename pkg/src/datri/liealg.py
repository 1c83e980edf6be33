"""Metric Lie algebras and the curvature of their left-invariant metrics.

All geometry is computed in an orthonormal ("internal") basis
``b = e L^{-T}`` where ``gram = L L^T``; a vector with coordinates ``x`` in
the user basis ``e`` has internal coordinates ``L^T x``.  Public functions
accept and return user-basis coordinates; operators on ``v``-perp are
matrices in the deterministic Householder basis of ``v``-perp.
"""

from __future__ import annotations

import threading
from functools import cached_property
from math import factorial

import numpy as np

from . import _numeric as num
from .errors import InvalidInputError, JacobiIdentityError, MetricError
from .symfun import SymOp

MAX_DIM = 12
DEFAULT_MAX_DERIVATIVE = 7
HARD_MAX_DERIVATIVE = 9
UNIT_TOL = 1e-6


class Geometry:
    """Levi-Civita data of a left-invariant metric at one working precision.

    Parameters
    ----------
    c : ndarray, shape (n, n, n)
        Structure constants in an orthonormal basis, ``[b_i, b_j] = c[i, j, k] b_k``.
    dps : int or None
        Decimal digits when ``c`` is an object array of mpf, else None.
    """

    def __init__(self, c: np.ndarray, dps: int | None = None):
        self.c = c
        self.dps = dps
        self.n = c.shape[0]
        with num.precision(dps):
            # G[i, j, k] = <nabla_{b_i} b_j, b_k>  (Koszul formula)
            self.G = (c - np.transpose(c, (0, 2, 1)) - np.transpose(c, (2, 0, 1))) / 2
            # Gam[i] is the matrix of nabla_{b_i}: Gam[i] @ z = nabla_{b_i} z
            self.Gam = np.transpose(self.G, (0, 2, 1))
            rm = (
                np.einsum("akl,blj->abkj", self.Gam, self.Gam)
                - np.einsum("bkl,alj->abkj", self.Gam, self.Gam)
                - np.einsum("abc,ckj->abkj", c, self.Gam)
            )
            # R4[a, b, c, d] = <R(b_a, b_b) b_c, b_d>
            self.R4 = np.transpose(rm, (0, 1, 3, 2))

    def nabla_matrix(self, x):
        """Matrix of ``nabla_x`` (supports a leading batch axis on ``x``)."""
        return np.einsum("...i,ikj->...kj", x, self.Gam)

    def connection(self, x, y):
        return np.einsum("i,j,ijk->k", x, y, self.G)

    def curvature(self, x, y, z):
        return np.einsum("a,b,c,abcd->d", x, y, z, self.R4)

    def jacobi_matrix(self, x):
        """Full n x n matrix of ``w -> R(w, x) x`` (batch axis allowed)."""
        return np.einsum("abcd,...b,...c->...da", self.R4, x, x)

    def frame(self, y):
        """Householder frame with last column ``y`` (internal unit vector)."""
        with num.precision(self.dps):
            return num.householder_frame(y)

    def jacobi_jets(self, y, frame, jmax: int) -> list:
        """Derivatives M^(j)(0), j = 0..jmax, of the parallel-frame Jacobi matrix.

        Along the geodesic through ``y`` the left-trivialised velocity and the
        transported frame obey ``x' = -nabla_x x`` and ``P' = -nabla_x P``.
        Because R is left-invariant, d/dt of R(P, x, x, P) along these curves
        is the covariant derivative with every derivative slot equal to the
        velocity, so the Taylor coefficients of ``M(t) = R(P, x, x, P)``
        times j! are exactly the matrices of R_v^(j).
        """
        with num.precision(self.dps):
            xs = [y]
            ps = [frame]
            for k in range(jmax):
                acc_x = 0
                acc_p = 0
                for p in range(k + 1):
                    g = self.nabla_matrix(xs[p])
                    acc_x = acc_x + g @ xs[k - p]
                    acc_p = acc_p + g @ ps[k - p]
                xs.append(-acc_x / (k + 1))
                ps.append(-acc_p / (k + 1))
            ys = []
            for m in range(jmax + 1):
                w = sum(np.outer(xs[q], xs[m - q]) for q in range(m + 1))
                ys.append(np.einsum("abcd,bc->da", self.R4, w))
            out = []
            for j in range(jmax + 1):
                mj = 0
                for p in range(j + 1):
                    for m in range(j - p + 1):
                        s = j - p - m
                        mj = mj + ps[p].T @ ys[m] @ ps[s]
                out.append(mj * factorial(j))
            return out

    def covariant_derivative(self, t: np.ndarray) -> np.ndarray:
        """Dense nabla of a left-invariant covariant tensor.

        ``(nabla_X T)(Y_1..Y_m) = -sum_s T(.., nabla_X Y_s, ..)``; the new
        derivative slot is prepended as axis 0.
        """
        m = t.ndim
        out = 0
        for s in range(m):
            # G[x, y_s, w] T[.., w, ..] -> axes (x, .., y_s, ..)
            term = np.tensordot(self.G, t, axes=([2], [s]))
            term = np.moveaxis(term, 1, s + 1)
            out = out - term
        return out


class MetricLieAlgebra:
    """Lie algebra with structure constants and an inner product.

    ``bracket[i, j, k]`` is the coefficient of ``e_k`` in ``[e_i, e_j]`` and
    ``gram[i, j] = <e_i, e_j>``.  Construction validates antisymmetry, the
    Jacobi identity and positive-definiteness of ``gram``.
    """

    def __init__(self, bracket, gram=None, name: str = ""):
        c = np.array(bracket, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise InvalidInputError(f"bracket must have shape (n, n, n), got {c.shape}")
        n = c.shape[0]
        if not 2 <= n <= MAX_DIM:
            raise InvalidInputError(f"dimension {n} outside 2..{MAX_DIM}")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("structure constants must be finite")
        if not np.array_equal(c, -np.transpose(c, (1, 0, 2))):
            i, j, k = np.argwhere(c != -np.transpose(c, (1, 0, 2)))[0]
            raise InvalidInputError(f"bracket not antisymmetric at (i={i}, j={j}, k={k})")
        g = np.eye(n) if gram is None else np.array(gram, dtype=float)
        if g.shape != (n, n):
            raise MetricError(f"metric must be {n}x{n}, got {g.shape}")
        if not np.all(np.isfinite(g)) or np.max(np.abs(g - g.T)) > 1e-12 * (1 + np.max(np.abs(g))):
            raise MetricError("metric is not symmetric")
        try:
            self._chol = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            bad = _first_nonpositive_minor(g)
            raise MetricError(f"metric not positive-definite (leading minor of size {bad})") from None
        self.name = name
        self.dim = n
        self.bracket = c
        self.gram = g
        c.setflags(write=False)
        g.setflags(write=False)
        self._check_jacobi()
        self._geometries: dict = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"MetricLieAlgebra(name={self.name!r}, dim={self.dim})"

    def _check_jacobi(self):
        c = self.bracket
        res = (
            np.einsum("ijk,klm->ijlm", c, c)
            + np.einsum("jlk,kim->ijlm", c, c)
            + np.einsum("lik,kjm->ijlm", c, c)
        )
        scale = 1.0 + float(np.max(np.abs(c)))
        tol = 1e-10 * scale**3
        worst = np.max(np.abs(res), axis=3)
        if np.max(worst) > tol:
            i, j, l = sorted(np.unravel_index(np.argmax(worst), worst.shape))
            raise JacobiIdentityError(
                f"Jacobi identity fails on triple ({i}, {j}, {l}): residual {np.max(worst):.3e}"
            )

    def jacobi_residual(self) -> float:
        c = self.bracket
        res = (
            np.einsum("ijk,klm->ijlm", c, c)
            + np.einsum("jlk,kim->ijlm", c, c)
            + np.einsum("lik,kjm->ijlm", c, c)
        )
        return float(np.max(np.abs(res)))

    # -- basis changes -------------------------------------------------------

    def to_internal(self, x, dps=None):
        """User-basis coordinates -> orthonormal internal coordinates."""
        if dps is None:
            return self._chol.T @ np.asarray(x, dtype=float)
        with num.precision(dps):
            return self._chol_mp(dps).T @ num.to_mp(x)

    def from_internal(self, y):
        """Internal coordinates -> user-basis coordinates (always float)."""
        return np.linalg.solve(self._chol.T, num.to_float(y))

    def _chol_mp(self, dps):
        with num.precision(dps):
            if np.array_equal(self.gram, np.eye(self.dim)):
                return num.eye(self.dim, dps)
            return num.cholesky(num.to_mp(self.gram))

    def norm(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sqrt(x @ self.gram @ x))

    def inner(self, x, y) -> float:
        return float(np.asarray(x, float) @ self.gram @ np.asarray(y, float))

    @cached_property
    def internal_bracket(self) -> np.ndarray:
        m = np.linalg.inv(self._chol).T
        return np.einsum("ia,jb,ijk,ck->abc", m, m, self.bracket, self._chol.T)

    def geometry(self, dps: int | None = None) -> Geometry:
        """Cached Levi-Civita data; ``dps`` selects extended precision."""
        with self._lock:
            geo = self._geometries.get(dps)
            if geo is None:
                if dps is None:
                    c = self.internal_bracket
                else:
                    with num.precision(dps):
                        lm = self._chol_mp(dps)
                        m = num.inv(lm).T
                        c = np.einsum("ia,jb,ijk,ck->abc", m, m, num.to_mp(self.bracket), lm.T)
                geo = Geometry(c, dps)
                self._geometries[dps] = geo
            return geo

    def unit_internal(self, v, dps=None):
        """Internal coordinates of ``v`` after checking |v| = 1 within 1e-6."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise InvalidInputError(f"vector must have shape ({self.dim},), got {v.shape}")
        nv = self.norm(v)
        if abs(nv - 1.0) > UNIT_TOL:
            raise InvalidInputError(f"vector is not unit: |v| = {nv:.9g}")
        y = self.to_internal(v, dps)
        with num.precision(dps):
            return y / num.norm(y)


def _first_nonpositive_minor(g) -> int:
    for k in range(1, g.shape[0] + 1):
        if np.linalg.det(g[:k, :k]) <= 0:
            return k
    return g.shape[0]


def from_brackets(dim: int, entries, gram=None, name: str = "") -> MetricLieAlgebra:
    """Build an algebra from ``(i, j, k, value)`` entries meaning [e_i, e_j] += value e_k."""
    c = np.zeros((dim, dim, dim))
    for i, j, k, val in entries:
        c[i, j, k] += val
        c[j, i, k] -= val
    return MetricLieAlgebra(c, gram, name)


# -- operations on user-basis vectors ----------------------------------------


def connection(alg: MetricLieAlgebra, x, y) -> np.ndarray:
    """nabla_X Y for left-invariant fields, from the Koszul formula."""
    geo = alg.geometry()
    return alg.from_internal(geo.connection(alg.to_internal(x), alg.to_internal(y)))


def curvature(alg: MetricLieAlgebra, x, y, z) -> np.ndarray:
    """R(X, Y) Z with R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]."""
    geo = alg.geometry()
    return alg.from_internal(
        geo.curvature(alg.to_internal(x), alg.to_internal(y), alg.to_internal(z))
    )


def sectional_curvature(alg: MetricLieAlgebra, x, y) -> float:
    """K(X, Y) = <R(X,Y)Y, X> / (|X|^2 |Y|^2 - <X,Y>^2)."""
    geo = alg.geometry()
    a, b = alg.to_internal(x), alg.to_internal(y)
    denom = (a @ a) * (b @ b) - (a @ b) ** 2
    if denom <= 1e-14 * (a @ a) * (b @ b):
        raise InvalidInputError("sectional curvature needs linearly independent vectors")
    return float(np.einsum("a,b,c,d,abcd->", a, b, b, a, geo.R4) / denom)


def perp_frame(alg: MetricLieAlgebra, v, dps=None) -> np.ndarray:
    """Internal-coordinate n x (n-1) orthonormal basis of v-perp."""
    y = alg.unit_internal(v, dps)
    return alg.geometry(dps).frame(y)[:, :-1]


def jacobi_operator(alg: MetricLieAlgebra, v) -> SymOp:
    """Matrix of R_v: w -> R(w, v) v on v-perp."""
    return curvature_derivative(alg, v, 0)


def jacobi_derivatives(alg: MetricLieAlgebra, v, jmax: int, dps=None, max_derivative=None):
    """R_v^(j) for j = 0..jmax as raw matrices, plus the v-perp frame used.

    Returns ``(mats, frame)`` with ``frame`` the internal n x (n-1) basis.
    """
    limit = DEFAULT_MAX_DERIVATIVE if max_derivative is None else max_derivative
    if limit > HARD_MAX_DERIVATIVE:
        raise InvalidInputError(f"derivative order capped at {HARD_MAX_DERIVATIVE}")
    if not 0 <= jmax <= limit:
        raise InvalidInputError(f"derivative order {jmax} outside 0..{limit}")
    geo = alg.geometry(dps)
    y = alg.unit_internal(v, dps)
    frame = geo.frame(y)[:, :-1]
    return geo.jacobi_jets(y, frame, jmax), frame


def curvature_derivative(alg: MetricLieAlgebra, v, j: int, max_derivative=None) -> SymOp:
    """R_v^(j) = (nabla^j R)(v, .., v; ., v) v restricted to v-perp."""
    mats, _ = jacobi_derivatives(alg, v, j, max_derivative=max_derivative)
    out, _ = num.symmetrize(mats[j])
    return SymOp(out)


def curvature_derivative_dense(alg: MetricLieAlgebra, v, j: int) -> SymOp:
    """Same as :func:`curvature_derivative` via the dense slot-replacement rule.

    Materialises nabla^j R (n^(4+j) entries); meant for small n and j.
    """
    geo = alg.geometry()
    y = alg.unit_internal(v)
    frame = geo.frame(y)[:, :-1]
    t = geo.R4
    for _ in range(j):
        t = geo.covariant_derivative(t)
    for _ in range(j):
        t = np.tensordot(y, t, axes=([0], [0]))
    m = np.einsum("abcd,b,c->ad", t, y, y)
    out, _ = num.symmetrize(frame.T @ m @ frame)
    return SymOp(out)


def lift(op, frame) -> np.ndarray:
    """Embed an operator on v-perp into the ambient internal coordinates."""
    m = op.entries if isinstance(op, SymOp) else op
    return frame @ m @ frame.T


def ad_matrix(alg: MetricLieAlgebra, x) -> np.ndarray:
    """User-basis matrix of ad_X (column j is [X, e_j])."""
    return np.einsum("i,ijk->kj", np.asarray(x, float), alg.bracket)


def random_algebra(n: int, rng: np.random.Generator, name: str = "random") -> MetricLieAlgebra:
    """Random valid metric Lie algebra of dimension n.

    A semidirect product R x_D R^(n-1) with random D, pushed through a
    random change of basis and given a random inner product.
    """
    d = rng.normal(size=(n - 1, n - 1))
    c = np.zeros((n, n, n))
    c[0, 1:, 1:] = d.T
    c[1:, 0, 1:] = -d.T
    g = rng.normal(size=(n, n)) + 2.5 * np.eye(n)
    ginv = np.linalg.inv(g)
    # new basis f_a = sum_i g[i, a] e_i
    c2 = np.einsum("ia,jb,ijk,ck->abc", g, g, c, ginv)
    q = rng.normal(size=(n, n))
    gram = q @ q.T + n * np.eye(n)
    c2 = (c2 - np.transpose(c2, (1, 0, 2))) / 2
    return MetricLieAlgebra(c2, gram, name)
