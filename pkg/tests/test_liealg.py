import json

import numpy as np
import pytest

from conftest import random_algebras, unit_samples
from datri.catalog import CATALOG_NAMES, catalog, dump_space, load_space, parse_space, resolve_space
from datri.errors import InvalidInputError, JacobiIdentityError, MetricError, SchemaError
from datri.iwasawa import IwasawaDecomposition, validate_iwasawa
from datri.liealg import (
    MetricLieAlgebra,
    ad_matrix,
    connection,
    curvature,
    curvature_derivative,
    curvature_derivative_dense,
    from_brackets,
    jacobi_derivatives,
    jacobi_operator,
    lift,
    perp_frame,
    random_algebra,
    sectional_curvature,
)
from datri.sampling import sample_unit_vector, sample_unit_vectors, splitmix64
from oracles import milnor_sectional


def rh2():
    # orthonormal H = e0, X = e1, [H, X] = X
    return from_brackets(2, [(0, 1, 1, 1.0)], name="rh2")


class TestParseSpace:
    def test_flat_file(self):
        alg, decomp = parse_space({"dim": 3, "brackets": [], "metric": np.eye(3).tolist()})
        assert np.all(alg.bracket == 0) and decomp is None

    def test_antisymmetric_completion(self):
        alg, _ = parse_space('{"dim": 3, "brackets": [[0, 1, 2, 1.5]]}')
        assert alg.bracket[0, 1, 2] == 1.5 and alg.bracket[1, 0, 2] == -1.5

    def test_jacobi_violation_names_triple(self):
        doc = {"dim": 3, "brackets": [[0, 1, 0, 1.0], [1, 2, 1, 1.0]]}
        with pytest.raises(JacobiIdentityError, match=r"\(0, 1, 2\)"):
            parse_space(doc)

    def test_semidirect_example_is_a_lie_algebra(self):
        # [e0,e1] = e0, [e1,e2] = e2 satisfies the Jacobi identity
        alg, _ = parse_space({"dim": 3, "brackets": [[0, 1, 0, 1.0], [1, 2, 2, 1.0]]})
        assert alg.jacobi_residual() == 0

    def test_non_spd_metric(self):
        with pytest.raises(MetricError, match="minor of size 2"):
            parse_space({"dim": 2, "brackets": [], "metric": [[1, 2], [2, 1]]})

    @pytest.mark.parametrize(
        "doc,match",
        [
            ({"dim": 3}, "brackets"),
            ({"dim": 3, "brackets": [], "extra": 1}, "Additional properties"),
            ({"dim": 1, "brackets": []}, "dim"),
            ({"dim": 2, "brackets": [[0, 1, 5, 1.0]]}, "out of range"),
            ({"dim": 2, "brackets": [[1, 0, 0, 1.0]]}, "i < j"),
            ({"dim": 2, "brackets": [[0, 1, 0, 1.0], [0, 1, 0, 2.0]]}, "duplicate"),
            ({"dim": 2, "brackets": [], "metric": [[1, 0]]}, "metric"),
            ({"dim": 2, "brackets": [["a", 1, 0, 1.0]]}, "brackets/0/0"),
        ],
    )
    def test_schema_errors(self, doc, match):
        with pytest.raises(SchemaError, match=match):
            parse_space(doc)

    def test_invalid_json(self):
        with pytest.raises(SchemaError):
            parse_space("{not json")

    def test_roundtrip(self, tmp_path):
        alg, decomp = catalog("dr7_nonsymmetric")
        path = tmp_path / "dr7.json"
        path.write_text(json.dumps(dump_space(alg, decomp)))
        alg2, decomp2 = load_space(path)
        assert np.array_equal(alg.bracket, alg2.bracket)
        assert decomp2 == decomp
        assert resolve_space(str(path))[0].dim == 7

    def test_iwasawa_block_validated(self):
        with pytest.raises(InvalidInputError, match="partition"):
            parse_space({"dim": 2, "brackets": [], "iwasawa": {"a": [0], "n": [0]}})

    def test_missing_file(self):
        with pytest.raises(InvalidInputError, match="not found"):
            resolve_space("/nonexistent/space.json")


class TestMetricLieAlgebra:
    def test_dimension_bounds(self):
        with pytest.raises(InvalidInputError):
            MetricLieAlgebra(np.zeros((1, 1, 1)))
        with pytest.raises(InvalidInputError):
            MetricLieAlgebra(np.zeros((13, 13, 13)))

    def test_requires_exact_antisymmetry(self):
        c = np.zeros((2, 2, 2))
        c[0, 1, 1] = 1.0
        with pytest.raises(InvalidInputError, match="antisymmetric"):
            MetricLieAlgebra(c)

    def test_immutable(self):
        alg, _ = catalog("su2")
        with pytest.raises(ValueError):
            alg.bracket[0, 1, 2] = 3.0

    def test_random_algebras_valid(self):
        for alg in random_algebras(20):
            assert alg.jacobi_residual() < 1e-10 * (1 + np.max(np.abs(alg.bracket))) ** 3


class TestConnection:
    def test_abelian(self):
        alg, _ = catalog("flat(4)")
        x, y = np.eye(4)[0], np.ones(4)
        assert np.all(connection(alg, x, y) == 0)

    def test_rh2(self):
        alg = rh2()
        h, x = np.eye(2)
        np.testing.assert_allclose(connection(alg, x, x), h, atol=1e-15)
        np.testing.assert_allclose(connection(alg, x, h), -x, atol=1e-15)
        np.testing.assert_allclose(connection(alg, h, h), 0, atol=1e-15)

    @pytest.mark.parametrize("name", ["rhyp(4)", "ch2_damek_ricci", "dr7_nonsymmetric"])
    def test_nabla_h_vanishes(self, name):
        alg, decomp = catalog(name)
        h = np.asarray(decomp.h0)
        for y in np.eye(alg.dim):
            np.testing.assert_allclose(connection(alg, h, y), 0, atol=1e-14)

    def test_metric_compatibility(self, rng):
        for alg in random_algebras(10) + [catalog(n)[0] for n in ("su2", "dr7_nonsymmetric")]:
            x, y, z = rng.normal(size=(3, alg.dim))
            lhs = alg.inner(connection(alg, x, y), z) + alg.inner(y, connection(alg, x, z))
            assert abs(lhs) <= 1e-12 * (1 + np.linalg.norm(x) * np.linalg.norm(y) * np.linalg.norm(z))

    def test_torsion_free(self, rng):
        alg = random_algebras(1, seed=3)[0]
        x, y = rng.normal(size=(2, alg.dim))
        br = np.einsum("i,j,ijk->k", x, y, alg.bracket)
        np.testing.assert_allclose(connection(alg, x, y) - connection(alg, y, x), br, atol=1e-11)


class TestCurvature:
    def _check_symmetries(self, alg, rng):
        x, y, z, w = rng.normal(size=(4, alg.dim))

        def r4(a, b, c, d):
            return alg.inner(curvature(alg, a, b, c), d)

        base = r4(x, y, z, w)
        scale = 1 + float(np.max(np.abs(alg.bracket))) ** 2 * np.prod([np.linalg.norm(q) for q in (x, y, z, w)])
        residuals = [
            base + r4(y, x, z, w),
            base + r4(x, y, w, z),
            base - r4(z, w, x, y),
            base + r4(y, z, x, w) + r4(z, x, y, w),
        ]
        return max(abs(r) for r in residuals) / scale

    def test_symmetries_catalog(self, space, rng):
        assert self._check_symmetries(space[0], rng) <= 1e-9

    def test_symmetries_random(self, rng):
        algs = random_algebras(100, seed=11)
        assert max(self._check_symmetries(a, rng) for a in algs) <= 1e-9

    def test_sign_convention(self):
        for n in (2, 3, 5):
            alg, _ = catalog(f"rhyp({n})")
            vs = sample_unit_vectors(alg, 4)
            for a, b in zip(vs, vs[1:]):
                assert sectional_curvature(alg, a, b) == pytest.approx(-1.0, abs=1e-12)
        alg, _ = catalog("su2")
        assert sectional_curvature(alg, [1, 0, 0], [0, 1, 0]) == pytest.approx(1.0)

    def test_sectional_rejects_parallel(self):
        alg, _ = catalog("su2")
        with pytest.raises(InvalidInputError):
            sectional_curvature(alg, [1, 0, 0], [2, 0, 0])

    def test_against_milnor_formula(self, rng):
        for alg in [catalog(n)[0] for n in ("heisenberg3", "su2", "dr7_nonsymmetric")] + random_algebras(10):
            v = sample_unit_vector(alg, 3, 0)
            frame = perp_frame(alg, v)
            r = jacobi_operator(alg, v).entries
            y = alg.to_internal(v)
            for i in range(alg.dim - 1):
                expected = milnor_sectional(alg.internal_bracket, frame[:, i], y)
                assert r[i, i] == pytest.approx(expected, abs=1e-10 * (1 + abs(expected)))


class TestJacobiOperator:
    def test_flat(self):
        alg, _ = catalog("flat(3)")
        assert np.all(jacobi_operator(alg, [0, 0, 1.0]).entries == 0)

    @pytest.mark.parametrize("n", [3, 5])
    def test_constant_curvature(self, n):
        alg, _ = catalog(f"rhyp({n})")
        for v in sample_unit_vectors(alg, 5):
            np.testing.assert_allclose(jacobi_operator(alg, v).entries, -np.eye(n - 1), atol=1e-13)

    @pytest.mark.parametrize("name", ["rhyp(4)", "ch2_damek_ricci", "dr7_nonsymmetric"])
    def test_iwasawa_h(self, name):
        alg, decomp = catalog(name)
        h = np.asarray(decomp.h0)
        frame = perp_frame(alg, h)
        r = lift(jacobi_operator(alg, h), frame)
        ad = ad_matrix(alg, h)
        np.testing.assert_allclose(r, -(ad @ ad), atol=1e-13)

    def test_symmetric(self):
        for alg in random_algebras(10):
            v = sample_unit_vector(alg, 1, 0)
            (m,), _ = jacobi_derivatives(alg, v, 0)
            assert np.max(np.abs(m - m.T)) <= 1e-10

    def test_non_unit_rejected(self):
        alg, _ = catalog("su2")
        with pytest.raises(InvalidInputError, match="not unit"):
            jacobi_operator(alg, [2.0, 0, 0])

    def test_near_unit_normalized(self):
        alg, _ = catalog("su2")
        np.testing.assert_allclose(jacobi_operator(alg, [1 + 1e-8, 0, 0]).entries, np.eye(2), atol=1e-7)

    def test_basis_change_invariance(self, rng):
        alg, _ = catalog("dr7_nonsymmetric")
        g = rng.normal(size=(7, 7)) + 3 * np.eye(7)
        ginv = np.linalg.inv(g)
        c2 = np.einsum("ia,jb,ijk,ck->abc", g, g, alg.bracket, ginv)
        c2 = (c2 - np.transpose(c2, (1, 0, 2))) / 2
        alg2 = MetricLieAlgebra(c2, g.T @ g)
        v = sample_unit_vector(alg, 1, 0)
        v2 = ginv @ v
        for j in range(3):
            lam1 = np.linalg.eigvalsh(curvature_derivative(alg, v, j).entries)
            lam2 = np.linalg.eigvalsh(curvature_derivative(alg2, v2, j).entries)
            np.testing.assert_allclose(lam1, lam2, atol=1e-9)


class TestCurvatureDerivative:
    def test_j0(self, space):
        alg = space[0]
        v = sample_unit_vector(alg, 1, 0)
        np.testing.assert_array_equal(curvature_derivative(alg, v, 0).entries, jacobi_operator(alg, v).entries)

    def test_constant_curvature_zero(self):
        alg, _ = catalog("rhyp(4)")
        v = sample_unit_vector(alg, 1, 0)
        for j in range(1, 6):
            assert np.max(np.abs(curvature_derivative(alg, v, j).entries)) <= 1e-13

    def test_max_order(self):
        alg, _ = catalog("su2")
        with pytest.raises(InvalidInputError):
            curvature_derivative(alg, [1.0, 0, 0], 8)
        assert curvature_derivative(alg, [1.0, 0, 0], 8, max_derivative=9).dim == 2
        with pytest.raises(InvalidInputError):
            curvature_derivative(alg, [1.0, 0, 0], 10, max_derivative=10)

    def test_parity(self, space):
        alg = space[0]
        for v in unit_samples(alg, 4):
            for j in range(6):
                a = curvature_derivative(alg, v, j).entries
                b = curvature_derivative(alg, -v, j).entries
                assert np.max(np.abs(a - (-1) ** j * b)) <= 1e-10

    def test_parity_random(self):
        for alg in random_algebras(12):
            v = sample_unit_vector(alg, 2, 0)
            for j in range(5):
                a = curvature_derivative(alg, v, j).entries
                b = curvature_derivative(alg, -v, j).entries
                assert np.max(np.abs(a - (-1) ** j * b)) <= 1e-10 * (1 + np.max(np.abs(a)))

    def test_dense_rule_agrees(self):
        for alg in random_algebras(6, dims=(3, 4, 5)) + [catalog("dr7_nonsymmetric")[0]]:
            v = sample_unit_vector(alg, 5, 0)
            for j in range(4 if alg.dim < 7 else 3):
                a = curvature_derivative(alg, v, j).entries
                b = curvature_derivative_dense(alg, v, j).entries
                assert np.max(np.abs(a - b)) <= 1e-10 * (1 + np.max(np.abs(a)))

    @pytest.mark.parametrize("name", ["rhyp(4)", "ch2_damek_ricci", "dr7_nonsymmetric"])
    def test_iwasawa_geodesics(self, name):
        alg, decomp = catalog(name)
        h = np.asarray(decomp.h0)
        assert np.max(np.abs(curvature_derivative(alg, h, 1).entries)) <= 1e-13

    def test_extended_precision_matches(self):
        alg, _ = catalog("dr7_nonsymmetric")
        v = sample_unit_vector(alg, 1, 0)
        mats, _ = jacobi_derivatives(alg, v, 4)
        mp_mats, _ = jacobi_derivatives(alg, v, 4, dps=30)
        for a, b in zip(mats, mp_mats):
            np.testing.assert_allclose(a, np.array(b, dtype=float), atol=1e-13)


class TestCatalog:
    def test_names(self):
        for name in CATALOG_NAMES:
            catalog(name.replace("(n)", "(3)"))

    def test_unknown(self):
        with pytest.raises(InvalidInputError, match="catalog"):
            catalog("rhyp3")

    def test_bounds(self):
        with pytest.raises(InvalidInputError):
            catalog("flat(13)")

    def test_flat(self):
        assert np.all(catalog("flat(3)")[0].bracket == 0)

    def test_heisenberg_orthonormal(self):
        alg, _ = catalog("heisenberg3")
        assert alg.bracket[0, 1, 2] == 1.0 and np.array_equal(alg.gram, np.eye(3))

    def test_su2_positive(self):
        alg, _ = catalog("su2")
        for v in sample_unit_vectors(alg, 3):
            np.testing.assert_allclose(jacobi_operator(alg, v).entries, np.eye(2), atol=1e-13)

    @pytest.mark.parametrize("name", ["ch2_damek_ricci", "dr7_nonsymmetric"])
    def test_damek_ricci_nonpositive(self, name):
        alg, _ = catalog(name)
        vs = sample_unit_vectors(alg, 20)
        ks = [sectional_curvature(alg, a, b) for a, b in zip(vs, vs[1:])]
        assert max(ks) < 0 and min(ks) >= -1 - 1e-12


class TestIwasawa:
    @pytest.mark.parametrize("name", ["rhyp(2)", "rhyp(5)", "ch2_damek_ricci", "dr7_nonsymmetric"])
    def test_accepts(self, name):
        alg, decomp = catalog(name)
        assert validate_iwasawa(alg, decomp).accepted

    def test_accepts_without_h0(self):
        alg, decomp = catalog("dr7_nonsymmetric")
        rep = validate_iwasawa(alg, IwasawaDecomposition(decomp.a_indices, decomp.n_indices))
        assert rep.accepted and "+e0" in rep.condition_iii.detail

    def test_negative_h_found(self):
        alg = from_brackets(3, [(0, 1, 1, -1.0), (0, 2, 2, -1.0)])
        rep = validate_iwasawa(alg, IwasawaDecomposition([0], [1, 2]))
        assert rep.accepted and "-e0" in rep.condition_iii.detail

    def test_heisenberg_rejected_with_both_reasons(self):
        alg, decomp = catalog("heisenberg3")
        rep = validate_iwasawa(alg, decomp)
        assert not rep.accepted
        text = " ".join(rep.messages)
        assert "a is not abelian" in text and "ad_H|n is zero" in text

    @pytest.mark.parametrize("n", [3, 5])
    def test_flat_rejected(self, n):
        alg, decomp = catalog(f"flat({n})")
        rep = validate_iwasawa(alg, decomp)
        assert not rep.accepted and not rep.condition_i.passed and not rep.condition_ii.passed

    def test_not_determined(self):
        # a = span(e0, e1) acting diagonally on n = span(e2, e3)
        alg = from_brackets(4, [(0, 2, 2, 1.0), (1, 3, 3, 1.0)])
        rep = validate_iwasawa(alg, IwasawaDecomposition([0, 1], [2, 3]))
        assert rep.condition_iii.status == "not-determined" and rep.verdict == "not-determined"
        rep2 = validate_iwasawa(alg, IwasawaDecomposition([0, 1], [2, 3], [1.0, 1.0, 0, 0]))
        assert rep2.accepted

    def test_nonsymmetric_ad_rejected(self):
        alg = from_brackets(3, [(0, 1, 1, 1.0), (0, 2, 2, 1.0), (0, 2, 1, 1.0)])
        rep = validate_iwasawa(alg, IwasawaDecomposition([0], [1, 2]))
        assert not rep.condition_ii.passed

    def test_malformed(self):
        alg, _ = catalog("rhyp(3)")
        with pytest.raises(InvalidInputError):
            validate_iwasawa(alg, IwasawaDecomposition([0], [1]))
        with pytest.raises(InvalidInputError, match="outside a"):
            validate_iwasawa(alg, IwasawaDecomposition([0], [1, 2], [1.0, 1.0, 0.0]))

    def test_non_orthogonal(self):
        alg = from_brackets(2, [(0, 1, 1, 1.0)], gram=[[1.0, 0.5], [0.5, 1.0]])
        with pytest.raises(InvalidInputError, match="orthogonal"):
            validate_iwasawa(alg, IwasawaDecomposition([0], [1]))


class TestSampling:
    def test_deterministic_and_order_free(self):
        alg, _ = catalog("dr7_nonsymmetric")
        a = sample_unit_vectors(alg, 10, 5)
        b = sample_unit_vectors(alg, 4, 5)
        np.testing.assert_array_equal(a[:4], b)
        np.testing.assert_array_equal(a[7], sample_unit_vector(alg, 5, 7))

    def test_unit_under_metric(self):
        alg = random_algebras(1)[0]
        for v in sample_unit_vectors(alg, 5):
            assert alg.norm(v) == pytest.approx(1.0, abs=1e-14)

    def test_splitmix_distinct(self):
        assert len({splitmix64(1, i) for i in range(1000)}) == 1000
        assert splitmix64(1, 0) != splitmix64(2, 0)
