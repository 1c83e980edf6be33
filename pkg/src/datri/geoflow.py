"""Geodesics, parallel frames and Jacobi fields on a group with a left-invariant metric.

Everything is carried in the left trivialisation and in internal
(orthonormal) coordinates.  Along a geodesic the velocity obeys the
Euler-Arnold equation ``x' = -nabla_x x`` and a parallel frame obeys
``E' = -nabla_x E``; the Jacobi matrix in that frame is
``M(t) = P(t)^T R(., x) x P(t)`` with ``P`` the first n-1 columns of ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import mpmath
import numpy as np

from . import _numeric as num
from .errors import ConjugatePointError, InvalidInputError, StepSizeError
from .iwasawa import IwasawaDecomposition, n_component_norm, validate_iwasawa
from .ledger import ledger_coefficients
from .liealg import Geometry, MetricLieAlgebra
from .symfun import SymOp, elementary_symmetric

DRIFT_LIMIT = 1e-6
DET_FLOOR = 1e-12
MAX_STEP = 1e-2
MAX_HORIZON = 100.0
SERIES_RADII = (0.01, 0.02, 0.04, 0.08)
FUNCTIONALS = ("trR", "trR2", "trR3", "combo")


# -- generic integrators on tuples of arrays ----------------------------------


def _axpy(y, a, k):
    return tuple(yi + a * ki for yi, ki in zip(y, k))


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(_axpy(y, h / 2, k1))
    k3 = f(_axpy(y, h / 2, k2))
    k4 = f(_axpy(y, h, k3))
    return tuple(yi + h / 6 * (a + 2 * b + 2 * c + d) for yi, a, b, c, d in zip(y, k1, k2, k3, k4))


def _modified_midpoint(f, y, big_h, steps):
    h = big_h / steps
    z0 = y
    z1 = _axpy(y, h, f(y))
    for _ in range(steps - 1):
        z0, z1 = z1, _axpy(z0, 2 * h, f(z1))
    last = f(z1)
    return tuple((a + b + h * c) / 2 for a, b, c in zip(z1, z0, last))


def _gbs_step(f, y, big_h, levels):
    """One extrapolated macro step (Gragg-Bulirsch-Stoer, sequence 2, 4, 6, ...)."""
    seq = [2 * (j + 1) for j in range(levels)]
    table = []
    for j, nj in enumerate(seq):
        row = [_modified_midpoint(f, y, big_h, nj)]
        for k in range(1, j + 1):
            nk = seq[j - k]
            prev, same = table[j - 1][k - 1], row[k - 1]
            # Neville in h^2 with an integer ratio nk^2 / (nj^2 - nk^2)
            row.append(tuple(s + (s - p) * (nk * nk) / (nj * nj - nk * nk) for s, p in zip(same, prev)))
        table.append(row)
    return table[-1][-1]


# -- geodesic equations -------------------------------------------------------


def _geodesic_rhs(geo: Geometry):
    def f(state):
        x, e = state
        g = geo.nabla_matrix(x)
        return (-np.einsum("...ij,...j->...i", g, x), -(g @ e))

    return f


def _jacobi_in_frame(geo: Geometry, x, e):
    """P^T J(x) P with P = e[..., :-1] (batch axes allowed)."""
    p = e[..., :-1]
    return np.swapaxes(p, -1, -2) @ geo.jacobi_matrix(x) @ p


def _check_drift(x, e, t):
    unit = float(np.max(np.abs(np.linalg.norm(x, axis=-1) - 1.0)))
    n = e.shape[-1]
    ortho = float(np.max(np.abs(np.swapaxes(e, -1, -2) @ e - np.eye(n))))
    if max(unit, ortho) > DRIFT_LIMIT:
        raise StepSizeError(
            f"invariant drift {max(unit, ortho):.3e} at t={t:.4g} exceeds {DRIFT_LIMIT:g}; use a smaller step"
        )


def _integrate_batch(geo: Geometry, ys, frames, t_max: float, h: float, t_min: float = 0.0):
    """RK4 from t=0 forward to ``t_max`` and backward to ``t_min`` on the grid h*Z.

    Returns ``ts`` (m,), ``xs`` (B, m, n) and ``es`` (B, m, n, n).
    """
    f = _geodesic_rhs(geo)
    n_fwd = int(round(t_max / h))
    n_bwd = int(round(-t_min / h))

    def run(steps, step):
        xs, es = [ys], [frames]
        state = (ys, frames)
        for i in range(steps):
            state = _rk4_step(f, state, step)
            xs.append(state[0])
            es.append(state[1])
        _check_drift(state[0], state[1], steps * step)
        return xs, es

    fx, fe = run(n_fwd, h)
    bx, be = run(n_bwd, -h)
    xs = bx[:0:-1] + fx
    es = be[:0:-1] + fe
    ts = h * np.arange(-n_bwd, n_fwd + 1)
    return ts, np.stack(xs, axis=1), np.stack(es, axis=1)


@dataclass(frozen=True, eq=False)
class GeodesicTrace:
    """Samples of the left-trivialised velocity and a parallel frame.

    ``xs`` and ``frames`` are in internal coordinates; ``frames[i]`` is
    orthonormal with last column ``xs[i]`` (up to integration error).
    """

    alg: MetricLieAlgebra
    v: np.ndarray
    step: float
    horizon: float
    ts: np.ndarray
    xs: np.ndarray
    frames: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def samples(self):
        """(t, x(t) in user coordinates, E(t) internal) triples."""
        return [(float(t), self.alg.from_internal(x), e) for t, x, e in zip(self.ts, self.xs, self.frames)]

    def speed_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.xs, axis=-1) - 1.0)))

    def frame_drift(self) -> float:
        n = self.xs.shape[-1]
        return float(np.max(np.abs(np.swapaxes(self.frames, -1, -2) @ self.frames - np.eye(n))))

    def jacobi_matrices(self) -> np.ndarray:
        if "m" not in self._cache:
            self._cache["m"] = _jacobi_in_frame(self.alg.geometry(), self.xs, self.frames)
        return self._cache["m"]


def integrate_geodesic(alg: MetricLieAlgebra, v, T: float, h: float, t_min: float = 0.0) -> GeodesicTrace:
    """Geodesic through the identity with initial velocity ``v`` on [t_min, T]."""
    if not 0 < h <= MAX_STEP:
        raise InvalidInputError(f"step must lie in (0, {MAX_STEP}]")
    if not 0 <= T <= MAX_HORIZON or t_min > 0 or -t_min > MAX_HORIZON:
        raise InvalidInputError(f"horizon must lie in [0, {MAX_HORIZON}] with t_min <= 0")
    geo = alg.geometry()
    y = alg.unit_internal(v)
    ts, xs, es = _integrate_batch(geo, y[None], geo.frame(y)[None], T, h, t_min)
    return GeodesicTrace(alg, np.asarray(v, float), h, T, ts, xs[0], es[0])


def jacobi_along(trace: GeodesicTrace, t: float) -> SymOp:
    """R_{x(t)} in the transported v-perp frame, linearly interpolated in t."""
    ts = trace.ts
    if not ts[0] - 1e-12 <= t <= ts[-1] + 1e-12:
        raise InvalidInputError(f"t={t} outside [{ts[0]}, {ts[-1]}]")
    i = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
    w = (t - ts[i]) / (ts[i + 1] - ts[i])
    geo = trace.alg.geometry()
    m0 = _jacobi_in_frame(geo, trace.xs[i], trace.frames[i])
    m1 = _jacobi_in_frame(geo, trace.xs[i + 1], trace.frames[i + 1])
    return SymOp.symmetrized((1 - w) * m0 + w * m1)


def iwasawa_limit(trace: GeodesicTrace, decomp: IwasawaDecomposition, every: int = 1):
    """|n-component of x(t)| over the trace (diagnostic only).

    Refuses decompositions that fail validation.
    """
    report = validate_iwasawa(trace.alg, decomp)
    if report.verdict == "fail":
        raise InvalidInputError("decomposition is not of Iwasawa type: " + "; ".join(report.messages))
    ts = trace.ts[::every]
    dist = np.array([n_component_norm(trace.alg, trace.alg.from_internal(x), decomp) for x in trace.xs[::every]])
    return {"t": ts, "dist_to_a": dist, "final": float(dist[-1])}


# -- flow invariants ------------------------------------------------------------


def _functionals(m: np.ndarray, h: float, which) -> dict:
    """Functional values on the interior grid (two points trimmed at each end)."""
    r = m[:, 2:-2]
    out = {}
    if "trR" in which:
        out["trR"] = np.trace(r, axis1=-2, axis2=-1)
    r2 = r @ r
    if "trR2" in which:
        out["trR2"] = np.trace(r2, axis1=-2, axis2=-1)
    r3 = r2 @ r
    if "trR3" in which:
        out["trR3"] = np.trace(r3, axis1=-2, axis2=-1)
    if "combo" in which:
        # five-point centred difference for R'
        d = (m[:, :-4] - 8 * m[:, 1:-3] + 8 * m[:, 3:-1] - m[:, 4:]) / (12 * h)
        out["combo"] = np.trace(32 * r3 - 9 * d @ d, axis1=-2, axis2=-1)
    return out


def _drift(f: np.ndarray) -> np.ndarray:
    f0 = f[:, :1]
    return np.max(np.abs(f - f0), axis=1) / (1 + np.abs(f0[:, 0]))


def flow_drifts(alg: MetricLieAlgebra, vs, T: float = 5.0, h: float = 1e-3, which=FUNCTIONALS, chunk: int = 32):
    """Per-sample drifts of the flow functionals and of the Jacobi eigenvalues.

    Returns ``{name: array over samples}`` with an extra ``"cspace"`` entry.
    """
    which = tuple(which)
    unknown = set(which) - set(FUNCTIONALS)
    if unknown:
        raise InvalidInputError(f"unknown functionals {sorted(unknown)}; choose from {FUNCTIONALS}")
    if not 0 < h <= MAX_STEP or not 0 < T <= MAX_HORIZON:
        raise InvalidInputError("need 0 < h <= 1e-2 and 0 < T <= 100")
    geo = alg.geometry()
    ys = np.array([alg.unit_internal(v) for v in vs])
    frames = np.array([geo.frame(y) for y in ys])
    results = {k: [] for k in which + ("cspace",)}
    for s in range(0, len(ys), chunk):
        # two extra grid points each side feed the centred difference
        _, xs, es = _integrate_batch(geo, ys[s : s + chunk], frames[s : s + chunk], T + 2 * h, h, -2 * h)
        m = _jacobi_in_frame(geo, xs, es)
        m = (m + np.swapaxes(m, -1, -2)) / 2
        for name, f in _functionals(m, h, which).items():
            results[name].append(_drift(f))
        lam = np.linalg.eigvalsh(m[:, 2:-2])
        gap = np.max(np.abs(lam - lam[:, :1]), axis=(1, 2))
        results["cspace"].append(gap / (1 + np.max(np.abs(lam[:, 0]), axis=-1)))
    return {k: np.concatenate(v) for k, v in results.items()}


def flow_invariant_drift(alg: MetricLieAlgebra, v, T: float = 5.0, h: float = 1e-3, which=FUNCTIONALS) -> dict:
    """max_t |f(t) - f(0)| / (1 + |f(0)|) for each requested functional."""
    out = flow_drifts(alg, [v], T, h, which)
    out.pop("cspace")
    return {k: float(a[0]) for k, a in out.items()}


def cspace_drift(alg: MetricLieAlgebra, v, T: float = 5.0, h: float = 1e-3) -> float:
    """Largest normalised change of the sorted Jacobi eigenvalues along the geodesic."""
    return float(flow_drifts(alg, [v], T, h, ())["cspace"][0])


# -- Jacobi fields and geodesic spheres ---------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereSolution:
    """Jacobi endomorphism at radius r and the shape operator S = A' A^{-1}.

    ``c`` is r S(r), computed as A' (A/r)^{-1} for conditioning.
    """

    r: float
    a: np.ndarray
    a_prime: np.ndarray
    c: np.ndarray
    shape: SymOp
    sigmas: np.ndarray
    asymmetry: float


def _sphere_rhs(geo: Geometry):
    geodesic = _geodesic_rhs(geo)

    def f(state):
        x, e, a, ap = state
        dx, de = geodesic((x, e))
        return (dx, de, ap, -(_jacobi_in_frame(geo, x, e) @ a))

    return f


def _guard(a, ap, s, h, last_safe):
    """Raise if a conjugate point lies at or before radius s."""
    b = a / s
    det = num.det(b)
    if not np.isfinite(float(det)) or abs(float(det)) < DET_FLOOR or float(det) <= 0:
        raise ConjugatePointError(f"conjugate point before r={s:.6g}", last_safe)
    # linear predictor: B + theta h B' singular for some theta in (0, 1]
    bp = num.to_float((ap - b) / s)
    lam = np.linalg.eigvals(np.linalg.solve(num.to_float(b), bp))
    if np.any((np.abs(lam.imag) < 1e-12) & (lam.real * h <= -1)):
        raise ConjugatePointError(f"conjugate point within one step of r={s:.6g}", s)


def _sphere_initial(alg, v, dps):
    geo = alg.geometry(dps)
    with num.precision(dps):
        y = alg.unit_internal(v, dps)
        e = geo.frame(y)
        d = alg.dim - 1
        return geo, (y, e, num.zeros((d, d), dps), num.eye(d, dps))


def _finish_sphere(r, a, ap, dps) -> SphereSolution:
    with num.precision(dps):
        c = ap @ num.inv(a / r)
    cf = num.to_float(c)
    sym, asym = num.symmetrize(cf)
    shape = SymOp(sym / r)
    return SphereSolution(r, num.to_float(a), num.to_float(ap), c, shape, elementary_symmetric(shape), asym)


def sphere_shape_operator(
    alg: MetricLieAlgebra, v, r: float, h: float, method: str = "rk4", dps: int | None = None, levels: int = 6
) -> SphereSolution:
    """Integrate A'' + M(t) A = 0, A(0) = 0, A'(0) = Id to radius r.

    ``method="rk4"`` uses fixed steps h (requires h <= r/100);
    ``method="extrapolated"`` uses Gragg-Bulirsch-Stoer macro steps of size
    h with ``levels`` extrapolation levels, optionally at ``dps`` digits.
    """
    if r <= 0:
        raise InvalidInputError("radius must be positive")
    if method == "rk4" and h > r / 100 * (1 + 1e-9):
        raise InvalidInputError(f"step {h} exceeds r/100 = {r / 100}")
    return sphere_shape_operators(alg, v, [r], h, method, dps, levels)[0]


def sphere_shape_operators(alg, v, radii, h, method="rk4", dps=None, levels=6) -> list:
    """Shape operators at several radii from a single integration.

    Radii must be integer multiples of the (macro) step h.
    """
    if method not in ("rk4", "extrapolated"):
        raise InvalidInputError(f"unknown method {method!r}")
    radii = sorted(radii)
    marks = [int(round(rr / h)) for rr in radii]
    if any(abs(m * h - rr) > 1e-9 * rr for m, rr in zip(marks, radii)) or min(marks) < 1:
        raise InvalidInputError("radii must be positive integer multiples of the step")
    geo, state = _sphere_initial(alg, v, dps)
    f = _sphere_rhs(geo)
    out = []
    with num.precision(dps):
        # decimal step at extended precision, e.g. 0.01 rather than its binary neighbour
        step = h if dps is None else mpmath.mpf(repr(h))
        last_safe = 0.0
        for i in range(1, marks[-1] + 1):
            state = _rk4_step(f, state, step) if method == "rk4" else _gbs_step(f, state, step, levels)
            s = i * step
            _guard(state[2], state[3], s, float(step), last_safe)
            last_safe = float(s)
            if i in marks:
                out.append(_finish_sphere(s, state[2], state[3], dps))
    return out


def oracle_defect(alg: MetricLieAlgebra, v, k: int, r: float, h: float, method="rk4", dps=None) -> float:
    """sigma_k(S_v(r)) - sigma_k(S_{-v}(r)) from the Jacobi-field oracle."""
    if not 1 <= k <= alg.dim - 1:
        raise InvalidInputError(f"k={k} outside 1..{alg.dim - 1}")
    v = np.asarray(v, float)
    plus = sphere_shape_operator(alg, v, r, h, method, dps)
    minus = sphere_shape_operator(alg, -v, r, h, method, dps)
    if dps is None:
        return float(plus.sigmas[k - 1] - minus.sigmas[k - 1])
    with num.precision(dps):
        sp = elementary_symmetric(plus.c)[k - 1]
        sm = elementary_symmetric(minus.c)[k - 1]
        return float((sp - sm) / mpmath.mpf(repr(r)) ** k)


# -- cross-checks -------------------------------------------------------------


def fd_jacobi_derivatives(alg: MetricLieAlgebra, v, jmax: int = 3, h: float = 1e-2, ode_step: float = 1e-3) -> list:
    """R_v^(j), j <= jmax, from degree-(j+2) polynomial fits of M(t) on [-h, h]."""
    trace = integrate_geodesic(alg, v, h, ode_step, -h)
    m = trace.jacobi_matrices()
    d = m.shape[-1]
    flat = m.reshape(len(trace.ts), -1)
    out = []
    for j in range(jmax + 1):
        coef = np.polynomial.polynomial.polyfit(trace.ts, flat, j + 2)
        mj = factorial(j) * coef[j].reshape(d, d)
        out.append((mj + mj.T) / 2)
    return out


@dataclass(frozen=True)
class SeriesOracleCheck:
    radii: tuple
    residuals: tuple
    slope: float
    exact: bool


def series_oracle_residuals(
    alg: MetricLieAlgebra, v, radii=SERIES_RADII, order: int = 7, dps: int = 40, levels: int = 6
) -> SeriesOracleCheck:
    """|r S_v(r) - sum_{k<=order} alpha_k r^k| (Frobenius) and its log-log slope.

    Both sides run at ``dps`` digits: the residual at r = 0.01 sits near
    1e-20, far below double precision.  ``exact`` marks a residual that is
    identically zero at working precision (e.g. a flat space).
    """
    radii = tuple(sorted(radii))
    series = ledger_coefficients(alg, v, order, dps=dps)
    sols = sphere_shape_operators(alg, v, radii, radii[0], "extrapolated", dps, levels)
    res = []
    with num.precision(dps):
        alphas = [a.entries for a in series.alphas]
        for rr, sol in zip(radii, sols):
            t = mpmath.mpf(repr(rr))
            poly = alphas[-1]
            for a in alphas[-2::-1]:
                poly = poly * t + a
            res.append(num.norm(sol.c - poly))
    floor = mpmath.mpf(10) ** (-(dps - 5))
    exact = all(abs(x) <= floor for x in res)
    resf = tuple(float(x) for x in res)
    slope = float("nan")
    if not exact:
        slope = float(np.polyfit(np.log(radii), np.log(np.maximum(resf, 1e-300)), 1)[0])
    return SeriesOracleCheck(radii, resf, slope, exact)


@dataclass(frozen=True)
class StepHalving:
    d_coarse: float
    d_fine: float
    ratio: float
    passed: bool


def step_halving(solve, h: float, noise: float = 1e-12) -> StepHalving:
    """Compare solve(h), solve(h/2), solve(h/4) for fourth-order behaviour.

    Passes if |y_h - y_{h/2}| <= 16.5 |y_{h/2} - y_{h/4}|, or if both
    differences already sit at the rounding floor ``noise * (1 + |y|)``.
    """
    y1, y2, y4 = (np.asarray(solve(h / s), dtype=float) for s in (1, 2, 4))
    d1 = float(np.max(np.abs(y1 - y2)))
    d2 = float(np.max(np.abs(y2 - y4)))
    floor = noise * (1 + float(np.max(np.abs(y4))))
    ratio = d1 / d2 if d2 > 0 else float("inf") if d1 > 0 else 0.0
    return StepHalving(d1, d2, ratio, d1 <= 16.5 * d2 or max(d1, d2) <= floor)
