"""k-D'Atri analysis: sigma_k defects of C_v(t) under v -> -v."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidInputError
from .ledger import DEFAULT_ORDER, LedgerSeries, ledger_coefficients
from .liealg import MetricLieAlgebra, jacobi_derivatives
from .sampling import sample_unit_vectors
from .symfun import ScalarSeries, sigma_series

DEFAULT_TOL = 1e-9


def curvature_scale(series: LedgerSeries) -> float:
    """1 + sum of Frobenius norms of R_v^(j); divides every reported residual."""
    return 1.0 + float(sum(np.linalg.norm(np.asarray(d.entries, dtype=float)) for d in series.derivs))


@dataclass(frozen=True, eq=False)
class DefectSeries:
    """sigma_k(C_v(t)) - sigma_k(C_{-v}(t)) through order N."""

    k: int
    series: ScalarSeries
    scale: float = 1.0

    @property
    def coeffs(self) -> np.ndarray:
        return np.asarray(self.series.coeffs, dtype=float)

    def normalized(self) -> np.ndarray:
        return np.abs(self.coeffs) / self.scale


def _check_k(alg: MetricLieAlgebra, k: int):
    if not 1 <= k <= alg.dim - 1:
        raise InvalidInputError(f"k={k} outside 1..{alg.dim - 1}")


def defect_series(
    alg: MetricLieAlgebra,
    v,
    k: int,
    order: int = DEFAULT_ORDER,
    series_pair: tuple[LedgerSeries, LedgerSeries] | None = None,
) -> DefectSeries:
    """Defect of sigma_k between the Ledger series of v and of -v.

    Both series are computed from first principles. Vanishing through t^N
    certifies the sigma_k(S) defect through t^(N-k).
    """
    _check_k(alg, k)
    v = np.asarray(v, dtype=float)
    if series_pair is None:
        series_pair = (ledger_coefficients(alg, v, order), ledger_coefficients(alg, -v, order))
    plus, minus = series_pair
    d = sigma_series(plus.operator_series(), k) - sigma_series(minus.operator_series(), k)
    return DefectSeries(k, d, max(curvature_scale(plus), curvature_scale(minus)))


@dataclass(frozen=True)
class GammaTable:
    """gamma_1..gamma_12 (``gamma[0]`` is gamma_1) and the curvature form of gamma_12."""

    gamma: tuple
    gamma12_curvature: float

    def __getitem__(self, i: int) -> float:
        if not 1 <= i <= 12:
            raise IndexError(f"gamma index {i} outside 1..12")
        return self.gamma[i - 1]


def gamma_table(alg: MetricLieAlgebra, v, series: LedgerSeries | None = None) -> GammaTable:
    if series is None:
        series = ledger_coefficients(alg, v, 7)
    if series.order < 7:
        raise InvalidInputError("gamma table needs a Ledger series of order >= 7")
    a = [np.asarray(x.entries, dtype=float) for x in series.alphas]
    tr = np.trace
    g = (
        tr(a[2]),
        tr(a[3]),
        tr(a[4]),
        tr(a[2] @ a[2]),
        tr(a[5]),
        2 * tr(a[2] @ a[3]),
        tr(a[6]),
        2 * tr(a[2] @ a[4]) + tr(a[3] @ a[3]),
        tr(a[2] @ a[2] @ a[2]),
        tr(a[7]),
        2 * tr(a[2] @ a[5]) + 2 * tr(a[3] @ a[4]),
        3 * tr(a[2] @ a[2] @ a[3]),
    )
    r = np.asarray(series.derivs[0].entries, dtype=float)
    r1 = np.asarray(series.derivs[1].entries, dtype=float)
    return GammaTable(tuple(float(x) for x in g), float(-tr(r @ r @ r1) / 12))


@dataclass(frozen=True)
class T7Identity:
    lhs: float
    rhs: float
    residual: float
    hypotheses_met: bool
    message: str = ""


def t7_coefficient_identity(
    alg: MetricLieAlgebra, v, k: int, tol: float = DEFAULT_TOL
) -> T7Identity:
    """Compare the t^7 sigma_k defect coefficient with (2/3) binom(n-4, k-3) gamma_12.

    Valid for n >= 4 and 3 <= k <= n-1 when L_3, L_5, L_7 vanish at v;
    otherwise the record says the hypotheses are not met.
    """
    n = alg.dim
    if n < 4 or not 3 <= k <= n - 1:
        return T7Identity(
            float("nan"), float("nan"), float("nan"), False,
            f"identity needs n >= 4 and 3 <= k <= n-1 (n={n}, k={k}); n = 3 is not covered",
        )
    v = np.asarray(v, dtype=float)
    plus = ledger_coefficients(alg, v, 7)
    minus = ledger_coefficients(alg, -v, 7)
    scale = curvature_scale(plus)
    odd = [abs(float(plus.c_derivs[j].trace())) / scale for j in (3, 5, 7)]
    rhs = 2 / 3 * comb(n - 4, k - 3) * gamma_table(alg, v, plus)[12]
    if max(odd) > tol:
        return T7Identity(
            float("nan"), rhs, float("nan"), False,
            "hypotheses not met: odd Ledger conditions "
            + ", ".join(f"L_{j}={x:.3e}" for j, x in zip((3, 5, 7), odd)),
        )
    lhs = float(defect_series(alg, v, k, 7, (plus, minus)).coeffs[7])
    return T7Identity(lhs, rhs, abs(lhs - rhs) / scale, True, "")


@dataclass(frozen=True)
class KSteinDefect:
    k: int
    mean: float
    spread: float
    is_kstein: bool
    values: tuple


def kstein_defect(
    alg: MetricLieAlgebra, k: int, samples: int = 64, seed: int = 1, tol: float = DEFAULT_TOL
) -> KSteinDefect:
    """Spread of tr R_v^k over sampled unit v."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    vals = []
    for v in sample_unit_vectors(alg, samples, seed):
        (r,), _ = jacobi_derivatives(alg, v, 0)
        vals.append(float(np.trace(np.linalg.matrix_power(r, k))))
    arr = np.array(vals)
    mean = float(arr.mean())
    spread = float(arr.max() - arr.min())
    return KSteinDefect(k, mean, spread, spread <= tol * (1 + abs(mean)), tuple(vals))
