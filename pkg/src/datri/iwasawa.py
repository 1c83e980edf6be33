"""Checks that a metric Lie algebra s = n + a is of Iwasawa type."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .liealg import MetricLieAlgebra

RANK_TOL = 1e-9
SYM_TOL = 1e-10
EIG_TOL = 1e-10

PASS, FAIL, UNDETERMINED = "pass", "fail", "not-determined"


@dataclass(frozen=True)
class IwasawaDecomposition:
    """Index sets of the user basis spanning a and n, plus an optional H0."""

    a_indices: tuple
    n_indices: tuple
    h0: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "a_indices", tuple(int(i) for i in self.a_indices))
        object.__setattr__(self, "n_indices", tuple(int(i) for i in self.n_indices))
        if self.h0 is not None:
            object.__setattr__(self, "h0", tuple(float(x) for x in self.h0))

    def check(self, alg: MetricLieAlgebra):
        """Raise InvalidInputError unless the index sets give an orthogonal partition."""
        n = alg.dim
        a, nn = self.a_indices, self.n_indices
        if not a or not nn:
            raise InvalidInputError("decomposition needs non-empty a and n")
        if sorted(a + nn) != list(range(n)):
            raise InvalidInputError(f"a={list(a)} and n={list(nn)} do not partition 0..{n - 1}")
        cross = alg.gram[np.ix_(a, nn)]
        if cross.size and np.max(np.abs(cross)) > 1e-10:
            raise InvalidInputError(f"a and n are not orthogonal (max |<e_a, e_n>| = {np.max(np.abs(cross)):.3e})")
        if self.h0 is not None:
            h0 = np.asarray(self.h0)
            if h0.shape != (n,):
                raise InvalidInputError(f"h0 must have {n} entries")
            if np.max(np.abs(h0[list(nn)]), initial=0.0) > 1e-12 * (1 + np.max(np.abs(h0))):
                raise InvalidInputError("h0 has components outside a")


@dataclass(frozen=True)
class ConditionCheck:
    status: str
    residual: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass(frozen=True)
class IwasawaReport:
    condition_i: ConditionCheck
    condition_ii: ConditionCheck
    condition_iii: ConditionCheck
    derived_n_matches_commutator: bool
    messages: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.condition_i.passed and self.condition_ii.passed and self.condition_iii.passed

    @property
    def verdict(self) -> str:
        if self.accepted:
            return PASS
        if (
            self.condition_i.passed
            and self.condition_ii.passed
            and self.condition_iii.status == UNDETERMINED
        ):
            return UNDETERMINED
        return FAIL


def _restricted_ad(alg: MetricLieAlgebra, h, nn):
    """Matrix of ad_h on span(e_n) in the e_n basis, and its leakage outside n."""
    full = np.einsum("i,ijk->kj", h, alg.bracket)
    others = [k for k in range(alg.dim) if k not in nn]
    leak = float(np.max(np.abs(full[np.ix_(others, nn)]), initial=0.0))
    return full[np.ix_(nn, nn)], leak


def _positive_spectrum(alg, h, nn):
    k, _ = _restricted_ad(alg, h, nn)
    lam = np.linalg.eigvals(k)
    return float(np.min(lam.real)), lam


def validate_iwasawa(alg: MetricLieAlgebra, decomp: IwasawaDecomposition) -> IwasawaReport:
    """Check conditions (i)-(iii) of an Iwasawa-type metric Lie algebra.

    (i) n = [s, s] and a abelian; (ii) ad_H restricted to n is symmetric and
    nonzero for each basis vector H of a; (iii) ad_H0 restricted to n has
    positive spectrum, with H0 supplied, or tried as +-H when dim a = 1.
    """
    decomp.check(alg)
    a, nn = list(decomp.a_indices), list(decomp.n_indices)
    c = alg.bracket
    scale = 1.0 + float(np.max(np.abs(c)))
    messages = []

    # (i)
    rows = c.reshape(-1, alg.dim)
    outside = float(np.max(np.abs(rows[:, a]), initial=0.0))
    sv = np.linalg.svd(rows[:, nn], compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * scale))
    derived_ok = outside <= RANK_TOL * scale and rank == len(nn)
    if not derived_ok:
        messages.append(
            f"(i) [s,s] has rank {rank} with {outside:.3e} leakage into a; n has dimension {len(nn)}"
        )
    aa = float(np.max(np.abs(c[np.ix_(a, a)])))
    abelian = aa <= RANK_TOL * scale
    if not abelian:
        messages.append(f"(i) a is not abelian: max |[a, a]| = {aa:.3e}")
    cond_i = ConditionCheck(
        PASS if derived_ok and abelian else FAIL,
        max(outside, aa, float(len(nn) - rank)),
        "n = [s,s], a abelian",
    )

    # (ii)
    gn = alg.gram[np.ix_(nn, nn)]
    worst_sym, smallest = 0.0, np.inf
    for i in a:
        h = np.zeros(alg.dim)
        h[i] = 1.0
        k, leak = _restricted_ad(alg, h, nn)
        sym = float(np.max(np.abs(gn @ k - k.T @ gn))) + leak
        mag = float(np.max(np.abs(k)))
        worst_sym = max(worst_sym, sym)
        smallest = min(smallest, mag)
        if sym > SYM_TOL * scale:
            messages.append(f"(ii) ad_H|n not symmetric for H = e{i} (residual {sym:.3e})")
        if mag <= SYM_TOL * scale:
            messages.append(f"(ii) ad_H|n is zero for H = e{i}")
    ok_ii = worst_sym <= SYM_TOL * scale and smallest > SYM_TOL * scale
    cond_ii = ConditionCheck(PASS if ok_ii else FAIL, worst_sym, "ad_H|n symmetric and nonzero")

    # (iii)
    if decomp.h0 is not None:
        lo, _ = _positive_spectrum(alg, np.asarray(decomp.h0), nn)
        status = PASS if lo > EIG_TOL else FAIL
        cond_iii = ConditionCheck(status, lo, "min eigenvalue of ad_H0|n (given H0)")
    elif len(a) == 1:
        h = np.zeros(alg.dim)
        h[a[0]] = 1.0
        lo_p, _ = _positive_spectrum(alg, h, nn)
        lo_m, _ = _positive_spectrum(alg, -h, nn)
        lo = max(lo_p, lo_m)
        sign = "+" if lo_p >= lo_m else "-"
        status = PASS if lo > EIG_TOL else FAIL
        cond_iii = ConditionCheck(status, lo, f"min eigenvalue of ad_H0|n with H0 = {sign}e{a[0]}")
    else:
        cond_iii = ConditionCheck(UNDETERMINED, float("nan"), "dim a > 1 and no H0 supplied")
        messages.append("(iii) not determined: supply h0")
    if cond_iii.status == FAIL:
        messages.append(f"(iii) ad_H0|n has non-positive eigenvalue ({cond_iii.residual:.3e})")

    return IwasawaReport(cond_i, cond_ii, cond_iii, derived_ok, messages)


def n_component_norm(alg: MetricLieAlgebra, x, decomp: IwasawaDecomposition) -> float:
    """Metric norm of the n-part of a user-basis vector (a and n orthogonal)."""
    nn = list(decomp.n_indices)
    xn = np.zeros(alg.dim)
    xn[nn] = np.asarray(x)[nn]
    return alg.norm(xn)
