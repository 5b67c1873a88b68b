import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iwproj.datagen import build_experiment1
from iwproj.errors import InvalidInputError
from iwproj.linalg import EigenDecomposition, eigh, spectral_norm
from iwproj.selfcheck import finite_difference_error, lemma_slack, random_lemma_instance
from iwproj.spectrum import (
    ClusterSelection,
    SpectrumSpec,
    basis_distance_sq,
    cluster_sample_eigenvalues,
    cluster_width,
    gamma_star,
    linear_term,
    projector,
    projector_distance_sq,
    spectral_gap,
)


def literal_linear_term(truth_eig, spec, sel, e):
    """Direct double sum over cluster projectors."""
    ps = [truth_eig.eigenvectors[:, c] @ truth_eig.eigenvectors[:, c].T for c in spec.clusters]
    out = np.zeros_like(e)
    for r in range(sel.first, sel.last + 1):
        for s in range(spec.q):
            if sel.contains(s):
                continue
            out += (ps[r] @ e @ ps[s] + ps[s] @ e @ ps[r]) / (spec.distinct[r] - spec.distinct[s])
    return out


class TestSpectrumSpec:
    def test_expansion_and_clusters(self):
        spec = SpectrumSpec((3.0, 1.0), (2, 3))
        np.testing.assert_array_equal(spec.eigenvalues, [3, 3, 1, 1, 1])
        assert spec.clusters == [range(0, 2), range(2, 5)]
        assert spec.dim == 5 and spec.q == 2

    @pytest.mark.parametrize(
        "mu, m", [((1.0, 2.0), (1, 1)), ((2.0, 2.0), (1, 1)), ((2.0, -1.0), (1, 1)), ((2.0,), (0,)), ((2.0, 1.0), (1,))]
    )
    def test_invalid(self, mu, m):
        with pytest.raises(InvalidInputError):
            SpectrumSpec(mu, m)

    def test_cluster_gaps(self):
        spec = SpectrumSpec((5.0, 3.0, 2.0), (1, 1, 1))
        np.testing.assert_allclose(spec.cluster_gaps(), [2.0, 1.0, 1.0])


class TestClusterSampleEigenvalues:
    def test_order_grouping(self):
        spec = SpectrumSpec((3.0, 1.0), (2, 3))
        assert cluster_sample_eigenvalues(np.arange(5.0)[::-1], spec) == [range(0, 2), range(2, 5)]

    def test_singletons(self):
        spec = SpectrumSpec((3.0, 2.0, 1.0), (1, 1, 1))
        assert cluster_sample_eigenvalues([3, 2, 1], spec) == [range(0, 1), range(1, 2), range(2, 3)]

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            cluster_sample_eigenvalues(np.ones(5), SpectrumSpec((2.0, 1.0), (2, 2)))


class TestSelection:
    def test_indices_and_dim(self):
        spec = SpectrumSpec((5.0, 4.0, 3.0, 1.0), (1, 2, 3, 1))
        sel = ClusterSelection(1, 2)
        assert sel.indices(spec) == range(1, 6)
        assert sel.dim(spec) == 5 and sel.size == 2

    def test_full_selection_rejected(self):
        spec = SpectrumSpec((2.0, 1.0), (1, 1))
        with pytest.raises(InvalidInputError):
            ClusterSelection(0, 1).validate(spec)
        with pytest.raises(InvalidInputError):
            spectral_gap(spec, ClusterSelection(0, 1))
        with pytest.raises(InvalidInputError):
            ClusterSelection(0, 2).validate(spec)


class TestGapWidth:
    def test_edge_case(self):
        spec = SpectrumSpec((3.0, 2.0, 1.0), (1, 1, 1))
        sel = ClusterSelection(1, 2)
        assert spectral_gap(spec, sel) == 1.0
        assert cluster_width(spec, sel) == 1.0

    def test_interior(self):
        spec = SpectrumSpec((5.0, 3.0, 2.0), (1, 1, 1))
        assert spectral_gap(spec, ClusterSelection(1, 1)) == 1.0
        assert cluster_width(spec, ClusterSelection(1, 1)) == 0.0

    def test_top_edge(self):
        spec = SpectrumSpec((5.0, 3.0, 2.0), (1, 1, 1))
        assert spectral_gap(spec, ClusterSelection(0, 1)) == 1.0
        assert cluster_width(spec, ClusterSelection(0, 1)) == 2.0

    def test_experiment1(self):
        d = build_experiment1(seed=0)
        assert spectral_gap(d.spectrum, d.selection) == pytest.approx(25.698 - 15.7688, abs=1e-12)
        assert spectral_gap(d.spectrum, d.selection) == pytest.approx(9.9292, abs=1e-12)


class TestProjector:
    def test_basis(self):
        dec = eigh(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(projector(dec, [0]).matrix, [[1, 0], [0, 0]], atol=1e-15)

    def test_complete(self):
        dec = eigh(np.diag([3.0, 2.0, 1.0]))
        np.testing.assert_allclose(projector(dec, range(3)).matrix, np.eye(3), atol=1e-15)

    def test_rotated(self):
        s = 1 / math.sqrt(2)
        dec = EigenDecomposition(np.array([3.0, 1.0]), np.array([[s, s], [s, -s]]))
        np.testing.assert_allclose(projector(dec, [0]).matrix, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            projector(eigh(np.eye(2)), [])

    def test_invariants_random(self):
        rng = np.random.default_rng(10)
        for _ in range(1000):
            p = int(rng.integers(2, 16))
            a = rng.uniform(-1, 1, (p, p))
            dec = eigh(a + a.T)
            k = int(rng.integers(1, p + 1))
            start = int(rng.integers(0, p - k + 1))
            proj = projector(dec, range(start, start + k))
            m = proj.matrix
            assert proj.rank == k
            assert np.max(np.abs(m @ m - m)) <= 1e-9
            assert np.array_equal(m, m.T)
            assert abs(np.trace(m) - k) <= 1e-9
            w = np.linalg.eigvalsh(m)
            assert np.all(np.minimum(np.abs(w), np.abs(w - 1)) <= 1e-8)


class TestDistance:
    def test_self(self):
        p = projector(eigh(np.diag([2.0, 1.0])), [0])
        assert projector_distance_sq(p, p) == 0.0

    def test_orthogonal(self):
        assert projector_distance_sq(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == 2.0

    def test_quarter_turn(self):
        t = math.pi / 4
        u = np.array([1.0, 0.0])
        v = np.array([math.cos(t), math.sin(t)])
        # 2 sin^2(theta) for rank-1 projectors at angle theta
        assert projector_distance_sq(np.outer(u, u), np.outer(v, v)) == pytest.approx(1.0)
        assert basis_distance_sq(u[:, None], v[:, None]) == pytest.approx(1.0)

    def test_bounds_random_subspaces(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            p = int(rng.integers(2, 12))
            m = int(rng.integers(1, p + 1))
            u, _ = np.linalg.qr(rng.standard_normal((p, m)))
            v, _ = np.linalg.qr(rng.standard_normal((p, m)))
            d = projector_distance_sq(u @ u.T, v @ v.T)
            assert -1e-12 <= d <= 2 * m + 1e-12
            assert basis_distance_sq(u, v) == pytest.approx(d, abs=1e-10)


class TestGammaStar:
    def test_two_clusters(self):
        g = gamma_star(SpectrumSpec((4.0, 1.0), (1, 2)), ClusterSelection(0, 0))
        np.testing.assert_allclose(g.diagonal, [8 / 9, 8 / 9])
        assert g.l2 == pytest.approx(8 * math.sqrt(2) / 9)

    def test_single_entry(self):
        g = gamma_star(SpectrumSpec((2.0, 1.0), (1, 1)), ClusterSelection(0, 0))
        np.testing.assert_allclose(g.diagonal, [4.0])
        assert g.l1 == g.l2 == g.linf == 4.0

    def test_symmetric_swap(self):
        spec = SpectrumSpec((2.0, 1.0), (1, 1))
        np.testing.assert_array_equal(
            gamma_star(spec, ClusterSelection(0, 0)).diagonal,
            gamma_star(spec, ClusterSelection(1, 1)).diagonal,
        )

    def test_ordering_and_length(self):
        spec = SpectrumSpec((9.0, 5.0, 3.0, 1.0), (2, 1, 3, 1))
        sel = ClusterSelection(1, 2)
        g = gamma_star(spec, sel)
        m = sel.dim(spec)
        assert g.diagonal.size == m * (spec.dim - m)
        f = lambda a, b: 2 * a * b / (a - b) ** 2
        expected = [f(5, 9)] * 2 + [f(5, 1)] + [f(3, 9)] * 6 + [f(3, 1)] * 3
        np.testing.assert_allclose(g.diagonal, expected)
        assert np.all(g.diagonal > 0)


class TestLinearTerm:
    def setup_method(self):
        self.spec = SpectrumSpec((2.0, 1.0), (1, 1))
        self.sel = ClusterSelection(0, 0)
        self.truth = self.spec.truth_eigen()

    def test_zero(self):
        np.testing.assert_array_equal(linear_term(self.truth, self.spec, self.sel, np.zeros((2, 2))), 0)

    def test_off_diagonal(self):
        e = np.array([[0.0, 0.1], [0.1, 0.0]])
        np.testing.assert_allclose(linear_term(self.truth, self.spec, self.sel, e), e, atol=1e-16)

    def test_diagonal_vanishes(self):
        out = linear_term(self.truth, self.spec, self.sel, np.diag([0.3, -0.2]))
        np.testing.assert_array_equal(out, 0)

    def test_matches_literal_sum_and_is_linear(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            spec, sel, truth, e = random_lemma_instance(rng)
            t_eig = eigh(truth)
            out = linear_term(t_eig, spec, sel, e)
            np.testing.assert_allclose(out, literal_linear_term(t_eig, spec, sel, e), atol=1e-12)
            assert np.linalg.matrix_rank(out, tol=1e-10) <= 2 * sel.dim(spec)
            e2 = rng.uniform(-1, 1, e.shape)
            e2 = e2 + e2.T
            a, b = rng.normal(size=2)
            lhs = linear_term(t_eig, spec, sel, a * e + b * e2)
            rhs = a * out + b * linear_term(t_eig, spec, sel, e2)
            assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


class TestPerturbationBounds:
    def test_perturbation_bounds_hold(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            inst = random_lemma_instance(rng)
            spec, sel, _, e = inst
            assert spectral_norm(e) <= spectral_gap(spec, sel) / 4 * (1 + 1e-12)
            dk, rem = lemma_slack(*inst)
            assert dk <= 1.0 and rem <= 1.0

    def test_finite_difference(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            assert finite_difference_error(*random_lemma_instance(rng)) <= 1e-3


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.1, 100.0), min_size=2, max_size=6, unique=True),
    st.data(),
)
def test_gamma_star_positive_and_sized(values, data):
    mu = tuple(sorted(values, reverse=True))
    if min(a - b for a, b in zip(mu, mu[1:])) < 1e-3:
        return
    mult = tuple(data.draw(st.lists(st.integers(1, 3), min_size=len(mu), max_size=len(mu))))
    spec = SpectrumSpec(mu, mult)
    first = data.draw(st.integers(0, spec.q - 1))
    last = data.draw(st.integers(first, spec.q - 1))
    if first == 0 and last == spec.q - 1:
        return
    sel = ClusterSelection(first, last)
    g = gamma_star(spec, sel)
    m = sel.dim(spec)
    assert g.diagonal.size == m * (spec.dim - m)
    assert np.all(np.isfinite(g.diagonal)) and np.all(g.diagonal > 0)
    assert g.linf <= g.l2 <= g.l1
