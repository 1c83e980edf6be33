"""Command-line driver: ``datri <command> ...``.

Exit codes: 0 all conditions pass, 1 some condition fails, 2 input error,
3 every condition passes but a numerical-degradation warning was raised.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .catalog import CATALOG_NAMES, resolve_space
from .errors import ConjugatePointError, DatriError, InvalidInputError, NumericalDegradationWarning
from .geoflow import flow_drifts, oracle_defect, series_oracle_residuals, sphere_shape_operator, step_halving
from .iwasawa import FAIL, PASS, UNDETERMINED, validate_iwasawa
from .kdatri import curvature_scale, defect_series, gamma_table, kstein_defect, t7_coefficient_identity
from .ledger import ledger_coefficients, trace_conditions_from
from .liealg import sectional_curvature
from .sampling import sample_unit_vectors, splitmix64

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_WARN = 0, 1, 2, 3

NORMALIZATION = (
    "residual = |value| / (1 + sum of Frobenius norms of the curvature operators R_v^(j) involved); "
    "flow drifts are max_t |f(t) - f(0)| / (1 + |f(0)|)"
)


@dataclass
class RunConfig:
    space: str
    seed: int = 1
    samples: int = 64
    order: int = 7
    tol: float = 1e-9
    ode_step: float = 1e-3
    format: str = "text"


@dataclass
class ConditionReport:
    name: str
    residuals: list
    max_residual: float
    verdict: str
    provenance: str
    tolerance: float
    wall_time: float = 0.0
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("wall_time")
        return d


def _condition(name, residuals, tol, provenance, notes=()) -> ConditionReport:
    vals = [float(r) for r in residuals]
    finite = [r for r in vals if not math.isnan(r)]
    worst = max(finite) if finite else float("nan")
    if not finite:
        verdict = UNDETERMINED
    else:
        verdict = PASS if worst <= tol and len(finite) == len(vals) else FAIL
    return ConditionReport(name, vals, worst, verdict, provenance, tol, notes=list(notes))


def _threads() -> int | None:
    raw = os.environ.get("DATRI_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"DATRI_THREADS must be an integer, got {raw!r}") from None
    return None if n <= 0 else n


def _map(fn, items):
    """Order-preserving map over samples, parallel up to DATRI_THREADS workers."""
    items = list(items)
    workers = _threads()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- condition suites ---------------------------------------------------------------


def suite_validate(alg, decomp, cfg: RunConfig, vs) -> tuple[list, dict]:
    conds = []
    scale = (1.0 + float(np.max(np.abs(alg.bracket)))) ** 3
    conds.append(
        _condition("algebra.jacobi_identity", [alg.jacobi_residual() / scale], cfg.tol, "structure constants")
    )
    geo = alg.geometry()

    def sym(item):
        i, v = item
        rng = np.random.default_rng(splitmix64(cfg.seed ^ 0x5EED, i))
        x = alg.to_internal(v)
        y, z, w = rng.standard_normal((3, alg.dim))
        r = geo.R4
        a = np.einsum("abcd,a,b,c,d->", r, x, y, z, w)
        vals = [
            a + np.einsum("abcd,a,b,c,d->", r, y, x, z, w),
            a + np.einsum("abcd,a,b,c,d->", r, x, y, w, z),
            a - np.einsum("abcd,a,b,c,d->", r, z, w, x, y),
            np.einsum("abcd,a,b,c,d->", r, x, y, z, w)
            + np.einsum("abcd,a,b,c,d->", r, y, z, x, w)
            + np.einsum("abcd,a,b,c,d->", r, z, x, y, w),
        ]
        size = 1 + float(np.max(np.abs(r))) * np.prod([np.linalg.norm(q) for q in (x, y, z, w)])
        return max(abs(t) for t in vals) / size

    conds.append(_condition("curvature.symmetries", _map(sym, enumerate(vs)), cfg.tol, "curvature tensor"))
    diag = {}
    if len(vs) >= 2:
        ks = [sectional_curvature(alg, a, b) for a, b in zip(vs[::2], vs[1::2])]
        diag["sectional_curvature_range"] = [min(ks), max(ks)]
    if decomp is None:
        diag["iwasawa"] = "no decomposition supplied"
        return conds, diag
    rep = validate_iwasawa(alg, decomp)
    meaning = {
        "i": "Iwasawa (i): residual is the largest of |[a, a]|, leakage of [s, s] into a, and rank deficit",
        "ii": "Iwasawa (ii): residual is the asymmetry of ad_H|n; a zero ad_H|n also fails",
        "iii": "Iwasawa (iii): value is the smallest eigenvalue of ad_H0|n, which must be positive",
    }
    for label, c in (("i", rep.condition_i), ("ii", rep.condition_ii), ("iii", rep.condition_iii)):
        cr = ConditionReport(
            f"iwasawa.condition_{label}",
            [c.residual],
            c.residual,
            c.status,
            meaning[label],
            cfg.tol,
            notes=[c.detail] + [m for m in rep.messages if m.startswith(f"({label})")],
        )
        conds.append(cr)
    diag["iwasawa_verdict"] = rep.verdict
    return conds, diag


def _series_pair(alg, v, order):
    return ledger_coefficients(alg, v, order), ledger_coefficients(alg, -np.asarray(v), order)


def suite_ledger(alg, cfg: RunConfig, vs, pairs=None) -> tuple[list, dict]:
    pairs = pairs or _map(lambda v: _series_pair(alg, v, cfg.order), vs)
    conds = []
    scales = [curvature_scale(p) for p, _ in pairs]
    for k in range(3, cfg.order + 1, 2):
        vals = [abs(float(p.c_derivs[k].trace())) / s for (p, _), s in zip(pairs, scales)]
        conds.append(_condition(f"ledger.L{k}", vals, cfg.tol, "odd Ledger condition tr C_v^(k)(0)"))
    par = []
    for (p, m), s in zip(pairs, scales):
        worst = 0.0
        for k in range(2, cfg.order + 1):
            d = np.asarray(p.alphas[k].entries, float) - (-1) ** k * np.asarray(m.alphas[k].entries, float)
            worst = max(worst, float(np.max(np.abs(d))))
        par.append(worst / s)
    conds.append(_condition("ledger.parity", par, cfg.tol, "alpha_k(-v) = (-1)^k alpha_k(v)"))
    tcs = [trace_conditions_from(p.derivs) for p, _ in pairs]
    conds.append(_condition("trace.T5", [t.t5_normalized for t in tcs], cfg.tol, "tr(R R')"))
    conds.append(_condition("trace.T7", [t.t7_normalized for t in tcs], cfg.tol, "16 tr(R' R^2) - 3 tr(R' R'')"))
    diag = {"c1_max_normalized": max(t.c1_normalized for t in tcs)}
    for k in range(2, cfg.order + 1, 2):
        vals = [float(p.c_derivs[k].trace()) for p, _ in pairs]
        diag[f"L{k}_mean"] = float(np.mean(vals))
        diag[f"L{k}_spread"] = float(np.max(vals) - np.min(vals))
    warns = sorted({w for p, m in pairs for w in p.warnings + m.warnings})
    if warns:
        diag["warnings"] = warns
    return conds, diag


def suite_kdatri(alg, cfg: RunConfig, vs, ks, pairs=None) -> tuple[list, dict]:
    pairs = pairs or _map(lambda v: _series_pair(alg, v, max(cfg.order, 7)), vs)
    conds = []
    for k in ks:
        defects = [defect_series(alg, v, k, series_pair=pr) for v, pr in zip(vs, pairs)]
        vals = [float(np.max(d.normalized()[: cfg.order + 1])) for d in defects]
        conds.append(
            _condition(
                f"kdatri.defect_sigma{k}",
                vals,
                cfg.tol,
                "sigma_k(C_v(t)) - sigma_k(C_-v(t)) coefficients",
                ["t^7 coefficient equals (2/3) binom(n-4, k-3) gamma_12 when L3 = L5 = L7 = 0"],
            )
        )
        even = [float(np.max(d.normalized()[0::2])) for d in defects]
        conds.append(_condition(f"kdatri.defect_even_sigma{k}", even, cfg.tol, "even defect coefficients"))
        if alg.dim >= 4 and 3 <= k <= alg.dim - 1:
            ids = _map(lambda v: t7_coefficient_identity(alg, v, k, cfg.tol), vs)
            notes = sorted({i.message for i in ids if i.message})
            conds.append(
                _condition(
                    f"kdatri.t7_identity_sigma{k}",
                    [i.residual for i in ids],
                    cfg.tol,
                    "t^7 defect coefficient vs (2/3) binom(n-4, k-3) gamma_12",
                    notes,
                )
            )
    tables = [gamma_table(alg, v, p) for v, (p, _) in zip(vs, pairs)]
    g12 = [abs(t[12] - t.gamma12_curvature) / curvature_scale(p) for t, (p, _) in zip(tables, pairs)]
    conds.append(_condition("kdatri.gamma12_identity", g12, cfg.tol, "3 tr(a2^2 a3) = -(1/12) tr(R^2 R')"))
    diag = {"gamma_first_sample": list(tables[0].gamma)}
    for k in (1, 2, 3):
        ks_ = kstein_defect(alg, k, cfg.samples, cfg.seed, cfg.tol)
        diag[f"kstein_{k}"] = {"mean": ks_.mean, "spread": ks_.spread, "is_kstein": ks_.is_kstein}
    return conds, diag


def suite_flow(alg, cfg: RunConfig, vs, powers=(1, 2, 3), combo=True, tmax=5.0) -> tuple[list, dict]:
    names = {1: "trR", 2: "trR2", 3: "trR3"}
    bad = [p for p in powers if p not in names]
    if bad:
        raise InvalidInputError(f"--powers accepts 1, 2, 3; got {bad}")
    which = tuple(names[p] for p in powers) + (("combo",) if combo else ())
    drifts = flow_drifts(alg, vs, tmax, cfg.ode_step, which)
    conds = [
        _condition(f"flow.{k}", drifts[k], cfg.tol, "geodesic-flow invariance of a curvature functional")
        for k in which
    ]
    conds.append(_condition("flow.cspace", drifts["cspace"], cfg.tol, "constancy of Jacobi eigenvalues"))
    return conds, {"tmax": tmax}


def suite_oracle(alg, cfg: RunConfig, vs, k, r, oracle_samples=8) -> tuple[list, dict]:
    if not 1 <= k <= alg.dim - 1:
        raise InvalidInputError(f"--k must lie in 1..{alg.dim - 1}")
    vs = vs[:oracle_samples]
    h = min(cfg.ode_step, r / 100)
    notes = []

    def defect(v):
        try:
            d = oracle_defect(alg, v, k, r, h)
            s = sphere_shape_operator(alg, v, r, h).sigmas[k - 1]
            return abs(d) / (1 + abs(s))
        except ConjugatePointError as exc:
            notes.append(f"{exc} (last safe radius {exc.last_safe_radius})")
            return float("inf")

    conds = [
        _condition(f"oracle.defect_sigma{k}", _map(defect, vs), cfg.tol, "ODE sigma_k(S_v(r)) - sigma_k(S_-v(r))", notes)
    ]

    def halving(v):
        try:
            chk = step_halving(lambda hh: sphere_shape_operator(alg, v, r, hh).shape.entries, h)
        except ConjugatePointError:
            return float("inf")
        return 0.0 if chk.passed else chk.ratio

    conds.append(_condition("oracle.step_halving", _map(halving, vs), cfg.tol, "fourth-order step-halving ratio"))
    checks = _map(lambda v: series_oracle_residuals(alg, v, order=7), vs)
    slopes = [0.0 if c.exact else abs(c.slope - 8.0) for c in checks]
    conds.append(
        _condition("oracle.series_vs_ode_slope", slopes, 0.4, "log-log slope of |r S(r) - sum alpha_k r^k| minus 8")
    )
    return conds, {"r": r, "oracle_samples": len(vs)}


# -- reporting ----------------------------------------------------------------------


def _clean(x):
    if isinstance(x, float):
        return None if math.isnan(x) else ("inf" if math.isinf(x) else x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return _clean(x.item())
    return x


def build_report(cfg: RunConfig, space: str, conds: list, diagnostics: dict, started: float) -> dict:
    conds = sorted(conds, key=lambda c: c.name)
    summary = {
        "pass": sum(c.verdict == PASS for c in conds),
        "fail": sum(c.verdict == FAIL for c in conds),
        "not_determined": sum(c.verdict == UNDETERMINED for c in conds),
    }
    return _clean(
        {
            "header": {
                "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "version": __version__,
                "wall_time_s": round(time.perf_counter() - started, 3),
                "condition_wall_time_s": {c.name: round(c.wall_time, 3) for c in conds},
            },
            "space": space,
            "config": asdict(cfg),
            "normalization": NORMALIZATION,
            "conditions": [c.to_json() for c in conds],
            "diagnostics": diagnostics,
            "summary": summary,
        }
    )


def render_text(report: dict) -> str:
    lines = [f"space: {report['space']}", f"normalization: {report['normalization']}"]
    for c in report["conditions"]:
        worst = c["max_residual"]
        shown = "n/a" if worst is None else (worst if isinstance(worst, str) else f"{worst:.3e}")
        lines.append(
            f"{c['verdict'].upper():15s} {c['name']:32s} max={shown:>10s} tol={c['tolerance']:.1e} "
            f"n={len(c['residuals'])}"
        )
        for note in c["notes"]:
            lines.append(f"{'':16s}note: {note}")
    for key, val in sorted(report["diagnostics"].items()):
        lines.append(f"diagnostic {key}: {val}")
    s = report["summary"]
    lines.append(f"summary: {s['pass']} pass, {s['fail']} fail, {s['not_determined']} not determined")
    return "\n".join(lines)


def emit(report: dict, cfg: RunConfig, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text if cfg.format == "json" else render_text(report))


def _parse_powers(raw: str) -> tuple:
    try:
        return tuple(int(p) for p in raw.split(",") if p.strip())
    except ValueError:
        raise InvalidInputError(f"--powers expects a comma list such as 1,2,3, got {raw!r}") from None


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--samples", type=int, default=64)
    common.add_argument("--order", type=int, default=7)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--ode-step", type=float, default=1e-3)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="also write the JSON report here")

    p = argparse.ArgumentParser(prog="datri", description="D'Atri and k-D'Atri checks on metric Lie algebras")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", help="built-in spaces")
    cat.add_argument("action", choices=("list",))

    val = sub.add_parser("validate", parents=[common], help="algebra invariants and Iwasawa report")
    val.add_argument("space")

    chk = sub.add_parser("check", help="condition suites")
    chk_sub = chk.add_subparsers(dest="suite", required=True)
    led = chk_sub.add_parser("ledger", parents=[common])
    led.add_argument("space")
    kd = chk_sub.add_parser("kdatri", parents=[common])
    kd.add_argument("space")
    kd.add_argument("--k", type=int, action="append", help="repeatable; default all 1..n-1")
    fl = chk_sub.add_parser("flow", parents=[common])
    fl.add_argument("space")
    fl.add_argument("--powers", default="1,2,3")
    fl.add_argument("--combo", action="store_true", help="include tr(32R^3 - 9R'R')")
    fl.add_argument("--tmax", type=float, default=5.0)

    ora = sub.add_parser("oracle", help="Jacobi-field oracle")
    ora_sub = ora.add_subparsers(dest="suite", required=True)
    sph = ora_sub.add_parser("sphere", parents=[common])
    sph.add_argument("space")
    sph.add_argument("--k", type=int, default=1)
    sph.add_argument("--r", type=float, default=0.3)
    sph.add_argument("--oracle-samples", type=int, default=8)

    rep = sub.add_parser("report", help="full suite")
    rep_sub = rep.add_subparsers(dest="suite", required=True)
    allp = rep_sub.add_parser("all", parents=[common])
    allp.add_argument("space")
    allp.add_argument("--tmax", type=float, default=5.0)
    allp.add_argument("--r", type=float, default=0.3)
    allp.add_argument("--oracle-samples", type=int, default=8)
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig(args.space, args.seed, args.samples, args.order, args.tol, args.ode_step, args.format)
    if cfg.samples < 1:
        raise InvalidInputError("--samples must be >= 1")
    if cfg.seed < 0:
        raise InvalidInputError("--seed must be non-negative")
    if not 2 <= cfg.order <= 11:
        raise InvalidInputError("--order must lie in 2..11")
    if cfg.tol <= 0 or not 0 < cfg.ode_step <= 1e-2:
        raise InvalidInputError("--tol must be positive and --ode-step in (0, 1e-2]")
    return cfg


def _timed(fn, *a, **kw):
    t0 = time.perf_counter()
    conds, diag = fn(*a, **kw)
    dt = (time.perf_counter() - t0) / max(len(conds), 1)
    for c in conds:
        c.wall_time = dt
    return conds, diag


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT

    if args.command == "catalog":
        print("\n".join(CATALOG_NAMES))
        return EXIT_OK

    started = time.perf_counter()
    try:
        cfg = _config(args)
        alg, decomp = resolve_space(args.space)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NumericalDegradationWarning)
            conds, diags = _dispatch(args, cfg, alg, decomp)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if "unknown space" in str(exc):
            print("available spaces: " + ", ".join(CATALOG_NAMES), file=sys.stderr)
        return EXIT_INPUT
    except DatriError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    degraded = [str(w.message) for w in caught if issubclass(w.category, NumericalDegradationWarning)]
    if degraded:
        diags["numerical_warnings"] = sorted(set(degraded))
    report = build_report(cfg, alg.name or args.space, conds, diags, started)
    emit(report, cfg, args.out)
    if report["summary"]["fail"]:
        return EXIT_FAIL
    return EXIT_WARN if degraded else EXIT_OK


def _dispatch(args, cfg, alg, decomp):
    vs = sample_unit_vectors(alg, cfg.samples, cfg.seed)
    cmd = args.command if args.command == "validate" else f"{args.command} {args.suite}"
    conds, diags = [], {}

    def add(prefix, result):
        c, d = result
        conds.extend(c)
        diags.update({f"{prefix}.{k}": v for k, v in d.items()})

    ks = list(range(1, alg.dim))
    if cmd == "validate":
        add("validate", _timed(suite_validate, alg, decomp, cfg, vs))
    elif cmd == "check ledger":
        add("ledger", _timed(suite_ledger, alg, cfg, vs))
    elif cmd == "check kdatri":
        chosen = args.k or ks
        bad = [k for k in chosen if k not in ks]
        if bad:
            raise InvalidInputError(f"--k must lie in 1..{alg.dim - 1}, got {bad}")
        add("kdatri", _timed(suite_kdatri, alg, cfg, vs, chosen))
    elif cmd == "check flow":
        add("flow", _timed(suite_flow, alg, cfg, vs, _parse_powers(args.powers), args.combo, args.tmax))
    elif cmd == "oracle sphere":
        add("oracle", _timed(suite_oracle, alg, cfg, vs, args.k, args.r, args.oracle_samples))
    elif cmd == "report all":
        pairs = _map(lambda v: _series_pair(alg, v, max(cfg.order, 7)), vs)
        add("validate", _timed(suite_validate, alg, decomp, cfg, vs))
        add("ledger", _timed(suite_ledger, alg, cfg, vs, pairs))
        add("kdatri", _timed(suite_kdatri, alg, cfg, vs, ks, pairs))
        add("flow", _timed(suite_flow, alg, cfg, vs, (1, 2, 3), True, args.tmax))
        add("oracle", _timed(suite_oracle, alg, cfg, vs, 1, args.r, args.oracle_samples))
    return conds, diags


def main(argv=None) -> None:
    sys.exit(run(argv))
