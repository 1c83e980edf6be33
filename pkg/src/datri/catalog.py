"""Built-in spaces and the JSON space-file format."""

from __future__ import annotations

import json
import re
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InvalidInputError, SchemaError
from .iwasawa import IwasawaDecomposition
from .liealg import MAX_DIM, MetricLieAlgebra, from_brackets

SPACE_SCHEMA = {
    "type": "object",
    "required": ["dim", "brackets"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "dim": {"type": "integer", "minimum": 2, "maximum": MAX_DIM},
        "brackets": {
            "type": "array",
            "items": {
                "type": "array",
                "minItems": 4,
                "maxItems": 4,
                "prefixItems": [
                    {"type": "integer", "minimum": 0},
                    {"type": "integer", "minimum": 0},
                    {"type": "integer", "minimum": 0},
                    {"type": "number"},
                ],
            },
        },
        "metric": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "iwasawa": {
            "type": "object",
            "required": ["a", "n"],
            "additionalProperties": False,
            "properties": {
                "a": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "n": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "h0": {"type": "array", "items": {"type": "number"}},
            },
        },
    },
}

CATALOG_NAMES = (
    "flat(n)",
    "rhyp(n)",
    "heisenberg3",
    "su2",
    "ch2_damek_ricci",
    "dr7_nonsymmetric",
)

# the six spaces exercised by the test and acceptance suites
STANDARD_SPACES = ("flat(3)", "rhyp(4)", "heisenberg3", "su2", "ch2_damek_ricci", "dr7_nonsymmetric")


def parse_space(document) -> tuple[MetricLieAlgebra, IwasawaDecomposition | None]:
    """Validate a space document (JSON text or already-decoded mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(SPACE_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"schema violation at {loc}: {err.message}")

    n = document["dim"]
    seen = set()
    entries = []
    for pos, (i, j, k, val) in enumerate(document["brackets"]):
        if max(i, j, k) >= n:
            raise SchemaError(f"brackets/{pos}: index out of range for dim {n}")
        if not i < j:
            raise SchemaError(f"brackets/{pos}: requires i < j, got ({i}, {j})")
        if (i, j, k) in seen:
            raise SchemaError(f"brackets/{pos}: duplicate entry ({i}, {j}, {k})")
        seen.add((i, j, k))
        entries.append((i, j, k, val))

    gram = document.get("metric")
    if gram is not None and (len(gram) != n or any(len(row) != n for row in gram)):
        raise SchemaError(f"metric must be {n}x{n}")
    alg = from_brackets(n, entries, gram, document.get("name", ""))

    decomp = None
    iw = document.get("iwasawa")
    if iw is not None:
        if any(i >= n for i in iw["a"] + iw["n"]):
            raise SchemaError("iwasawa: index out of range")
        h0 = iw.get("h0")
        if h0 is not None and len(h0) != n:
            raise SchemaError(f"iwasawa/h0 must have {n} entries")
        decomp = IwasawaDecomposition(iw["a"], iw["n"], h0)
        decomp.check(alg)
    return alg, decomp


def load_space(path) -> tuple[MetricLieAlgebra, IwasawaDecomposition | None]:
    return parse_space(Path(path).read_text(encoding="utf-8"))


def dump_space(alg: MetricLieAlgebra, decomp: IwasawaDecomposition | None = None) -> dict:
    """Inverse of :func:`parse_space` (brackets listed with i < j)."""
    n = alg.dim
    brackets = [
        [i, j, k, float(alg.bracket[i, j, k])]
        for i in range(n)
        for j in range(i + 1, n)
        for k in range(n)
        if alg.bracket[i, j, k] != 0.0
    ]
    doc = {"name": alg.name, "dim": n, "brackets": brackets, "metric": alg.gram.tolist()}
    if decomp is not None:
        doc["iwasawa"] = {"a": list(decomp.a_indices), "n": list(decomp.n_indices)}
        if decomp.h0 is not None:
            doc["iwasawa"]["h0"] = list(decomp.h0)
    return doc


def flat(n: int):
    alg = MetricLieAlgebra(np.zeros((n, n, n)), name=f"flat({n})")
    # a candidate split only; it fails validation
    return alg, IwasawaDecomposition([0], list(range(1, n)))


def rhyp(n: int):
    """Real hyperbolic space of curvature -1: [H, X] = X on R^(n-1)."""
    entries = [(0, i, i, 1.0) for i in range(1, n)]
    alg = from_brackets(n, entries, name=f"rhyp({n})")
    h0 = [1.0] + [0.0] * (n - 1)
    return alg, IwasawaDecomposition([0], list(range(1, n)), h0)


def heisenberg3():
    alg = from_brackets(3, [(0, 1, 2, 1.0)], name="heisenberg3")
    return alg, IwasawaDecomposition([0, 1], [2])


def su2():
    """Bi-invariant su(2) scaled to constant curvature +1."""
    entries = [(0, 1, 2, 2.0), (1, 2, 0, 2.0), (0, 2, 1, -2.0)]
    return from_brackets(3, entries, name="su2"), None


def _damek_ricci(name, j_maps):
    """Damek-Ricci algebra a + v + z from the J-maps of an H-type algebra.

    ``j_maps[r]`` is the skew matrix of J_{Z_r} on v; brackets are
    <[X, Y], Z_r> = <J_{Z_r} X, Y>, [H, X] = X/2, [H, Z] = Z.
    """
    m = j_maps[0].shape[0]
    nz = len(j_maps)
    n = 1 + m + nz
    entries = [(0, 1 + i, 1 + i, 0.5) for i in range(m)]
    entries += [(0, 1 + m + r, 1 + m + r, 1.0) for r in range(nz)]
    for r, jz in enumerate(j_maps):
        for i in range(m):
            for k in range(i + 1, m):
                # <J X_i, X_k> = jz[k, i]
                if jz[k, i] != 0.0:
                    entries.append((1 + i, 1 + k, 1 + m + r, float(jz[k, i])))
    alg = from_brackets(n, entries, name=name)
    return alg, IwasawaDecomposition([0], list(range(1, n)), [1.0] + [0.0] * (n - 1))


def ch2_damek_ricci():
    """Complex hyperbolic plane as the Damek-Ricci space over Heisenberg_3."""
    j = np.array([[0.0, -1.0], [1.0, 0.0]])
    return _damek_ricci("ch2_damek_ricci", [j])


def _quaternion_left(q: int) -> np.ndarray:
    """Matrix of left multiplication by i (q=1), j (q=2) or k (q=3) on (1, i, j, k)."""
    table = {
        1: {0: (1, 1), 1: (0, -1), 2: (3, 1), 3: (2, -1)},
        2: {0: (2, 1), 1: (3, -1), 2: (0, -1), 3: (1, 1)},
        3: {0: (3, 1), 1: (2, 1), 2: (1, -1), 3: (0, -1)},
    }[q]
    m = np.zeros((4, 4))
    for col, (row, sign) in table.items():
        m[row, col] = sign
    return m


def dr7_nonsymmetric():
    """7-dimensional non-symmetric Damek-Ricci space: v = H, z = span(i, j)."""
    return _damek_ricci("dr7_nonsymmetric", [_quaternion_left(1), _quaternion_left(2)])


_FIXED = {
    "heisenberg3": heisenberg3,
    "su2": su2,
    "ch2_damek_ricci": ch2_damek_ricci,
    "dr7_nonsymmetric": dr7_nonsymmetric,
}


def catalog(name: str):
    """Return ``(algebra, decomposition or None)`` for a catalog name."""
    name = name.strip()
    if name in _FIXED:
        return _FIXED[name]()
    m = re.fullmatch(r"(flat|rhyp)\((\d+)\)", name)
    if m:
        n = int(m.group(2))
        if not 2 <= n <= MAX_DIM:
            raise InvalidInputError(f"{m.group(1)}(n) needs 2 <= n <= {MAX_DIM}")
        return (flat if m.group(1) == "flat" else rhyp)(n)
    raise InvalidInputError(f"unknown space {name!r}; catalog: {', '.join(CATALOG_NAMES)}")


def resolve_space(source: str):
    """Catalog name or path to a space file."""
    path = Path(source)
    if path.suffix == ".json" or path.is_file():
        if not path.is_file():
            raise InvalidInputError(f"space file not found: {source}")
        return load_space(path)
    return catalog(source)
