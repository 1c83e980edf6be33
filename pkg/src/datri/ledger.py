"""Ledger's recursion for the Taylor coefficients of C_v(r) = r S_v(r)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np

from . import _numeric as num
from .errors import InvalidInputError, NumericalDegradationWarning
from .liealg import MetricLieAlgebra, jacobi_derivatives
from .symfun import OperatorSeries, SymOp

DEFAULT_ORDER = 7
MAX_ORDER = 11
ASYMMETRY_WARN = 1e-8


@dataclass(frozen=True, eq=False)
class LedgerSeries:
    """C_v^(k)(0) and alpha_k = C_v^(k)(0)/k! for k = 0..order.

    ``frame`` is the internal-coordinate basis of v-perp the operators are
    written in; ``derivs`` holds R_v^(j) for j = 0..order-2 in that basis.
    """

    v: np.ndarray
    order: int
    frame: np.ndarray
    c_derivs: tuple
    alphas: tuple
    derivs: tuple
    asymmetry: float
    warnings: tuple = ()

    def operator_series(self) -> OperatorSeries:
        return OperatorSeries(np.stack([a.entries for a in self.alphas]))

    def traces(self) -> list:
        """Ledger conditions L_k = tr C_v^(k)(0)."""
        return [c.trace() for c in self.c_derivs]


def _as_provider(derivs) -> Callable[[int], np.ndarray]:
    if callable(derivs):
        return derivs
    seq = list(derivs)

    def get(j):
        if j >= len(seq):
            raise InvalidInputError(f"derivative R^({j}) not supplied")
        m = seq[j]
        return m.entries if isinstance(m, SymOp) else np.asarray(m)

    return get


def ledger_recursion(derivs, order: int):
    """Run the recursion on injected Jacobi-operator derivatives.

    ``derivs`` is a sequence (or callable ``j -> matrix``) giving
    R_v, R_v', ..., R_v^(order-2).  Returns ``(c_derivs, asymmetry)`` with
    asymmetry = max_k max|C - C^T| / (1 + max|C|) before symmetrisation and
    ``c_derivs[k]`` is C_v^(k)(0) as a raw symmetrised matrix:

        (k+1) C^(k) = -k(k-1) R^(k-2) - sum_{l=2}^{k-2} binom(k,l) C^(l) C^(k-l)
    """
    if not 2 <= order <= MAX_ORDER:
        raise InvalidInputError(f"order {order} outside 2..{MAX_ORDER}")
    get = _as_provider(derivs)
    r0 = get(0)
    d = r0.shape[0]
    ident = num.to_mp(np.eye(d)) if r0.dtype == object else np.eye(d)
    cs = [ident, 0 * r0]
    asym = 0.0
    for k in range(2, order + 1):
        acc = -k * (k - 1) * get(k - 2)
        for l in range(2, k - 1):
            acc = acc - comb(k, l) * (cs[l] @ cs[k - l])
        ck, a = num.symmetrize(acc / (k + 1))
        # relative to the coefficient size, so rescaled metrics behave alike
        asym = max(asym, a / (1.0 + float(np.max(np.abs(ck)))))
        cs.append(ck)
    return cs, asym


_CLOSED_FORMS = {
    # k: (prefactor, [(coefficient, word of derivative orders)])
    2: (Fraction(-2, 3), [(1, (0,))]),
    3: (Fraction(-3, 2), [(1, (1,))]),
    4: (Fraction(-4, 5), [(3, (2,)), (Fraction(2, 3), (0, 0))]),
    5: (Fraction(-5, 3), [(2, (3,)), (1, (1, 0)), (1, (0, 1))]),
    6: (
        Fraction(-3, 7),
        [(10, (4,)), (8, (0, 2)), (8, (2, 0)), (15, (1, 1)), (Fraction(32, 9), (0, 0, 0))],
    ),
    7: (
        Fraction(-7, 12),
        [
            (9, (5,)),
            (10, (0, 3)),
            (10, (3, 0)),
            (27, (1, 2)),
            (27, (2, 1)),
            (11, (0, 0, 1)),
            (11, (1, 0, 0)),
            (10, (0, 1, 0)),
        ],
    ),
}


def closed_form(derivs, k: int) -> np.ndarray:
    """C_v^(k)(0) from the explicit formulas in R_v^(j), 2 <= k <= 7."""
    if k in (0, 1):
        r0 = _as_provider(derivs)(0)
        return np.eye(r0.shape[0]) if k == 0 else 0 * r0
    if k not in _CLOSED_FORMS:
        raise InvalidInputError(f"closed form available for k <= 7, got {k}")
    get = _as_provider(derivs)
    pref, terms = _CLOSED_FORMS[k]
    acc = 0
    for coef, word in terms:
        prod = get(word[0])
        for j in word[1:]:
            prod = prod @ get(j)
        acc = acc + float(coef) * prod
    return float(pref) * acc


def ledger_coefficients(
    alg: MetricLieAlgebra, v, order: int = DEFAULT_ORDER, dps: int | None = None
) -> LedgerSeries:
    """Ledger series of C_v(r) at the identity of the group.

    ``dps`` switches the whole chain (curvature, derivatives, recursion) to
    mpmath with that many digits.
    """
    if not 2 <= order <= MAX_ORDER:
        raise InvalidInputError(f"order {order} outside 2..{MAX_ORDER}")
    jmax = order - 2
    warns = []
    if order > DEFAULT_ORDER:
        warns.append(f"order {order} needs nabla^{jmax} R; expect a slower run")
    mats, frame = jacobi_derivatives(alg, v, jmax, dps=dps, max_derivative=max(jmax, 7))
    with num.precision(dps):
        derivs = [num.symmetrize(m)[0] for m in mats]
        cs, asym = ledger_recursion(derivs, order)
        alphas = [c / factorial(k) for k, c in enumerate(cs)]
    if asym > ASYMMETRY_WARN:
        msg = f"Ledger coefficients lost symmetry (max asymmetry {asym:.3e})"
        warns.append(msg)
        warnings.warn(msg, NumericalDegradationWarning, stacklevel=2)
    return LedgerSeries(
        v=np.asarray(v, dtype=float),
        order=order,
        frame=frame,
        c_derivs=tuple(SymOp(c) for c in cs),
        alphas=tuple(SymOp(a) for a in alphas),
        derivs=tuple(SymOp(m) for m in derivs),
        asymmetry=asym,
        warnings=tuple(warns),
    )


def closed_form_coefficient(alg: MetricLieAlgebra, v, k: int) -> SymOp:
    """C_v^(k)(0) evaluated from the closed forms, independent of the recursion."""
    if not 0 <= k <= 7:
        raise InvalidInputError(f"closed form available for k <= 7, got {k}")
    mats, _ = jacobi_derivatives(alg, v, max(k - 2, 0))
    return SymOp.symmetrized(closed_form([num.symmetrize(m)[0] for m in mats], k))


def ledger_condition(alg: MetricLieAlgebra, v, k: int, series: LedgerSeries | None = None) -> float:
    """L_k = tr C_v^(k)(0)."""
    if series is None:
        series = ledger_coefficients(alg, v, max(k, 2))
    if k > series.order:
        raise InvalidInputError(f"L_{k} needs a series of order >= {k}")
    return float(series.c_derivs[k].trace())


@dataclass(frozen=True)
class TraceConditions:
    """tr(R R'), 16 tr(R' R^2) - 3 tr(R' R''), tr(R' R^2) with normalised forms.

    Each normalised value divides by 1 + the product of Frobenius norms of
    the operators in each term (summed over terms with their weights).
    """

    t5: float
    t7: float
    c1: float
    t5_normalized: float
    t7_normalized: float
    c1_normalized: float


def trace_conditions_from(derivs: Sequence) -> TraceConditions:
    get = _as_provider(derivs)
    r, r1, r2 = get(0), get(1), get(2)
    nr, n1, n2 = (float(num.norm(m)) for m in (r, r1, r2))
    t5 = float(np.trace(r @ r1))
    c1 = float(np.trace(r1 @ r @ r))
    t7 = 16 * c1 - 3 * float(np.trace(r1 @ r2))
    return TraceConditions(
        t5=t5,
        t7=t7,
        c1=c1,
        t5_normalized=abs(t5) / (1 + nr * n1),
        t7_normalized=abs(t7) / (1 + 16 * n1 * nr * nr + 3 * n1 * n2),
        c1_normalized=abs(c1) / (1 + n1 * nr * nr),
    )


def trace_conditions(alg: MetricLieAlgebra, v) -> TraceConditions:
    mats, _ = jacobi_derivatives(alg, v, 2)
    return trace_conditions_from([num.symmetrize(m)[0] for m in mats])


def even_ledger_spread(series_list: Sequence[LedgerSeries], k: int) -> tuple[float, float]:
    """(mean, max - min) of L_k over several sample directions."""
    vals = np.array([float(s.c_derivs[k].trace()) for s in series_list])
    return float(vals.mean()), float(vals.max() - vals.min())
