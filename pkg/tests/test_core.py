import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motsink import (CircleGraph, CountingKernel, DirectKernel, DiscreteMeasure, OracleSizeError,
                     SinkhornConfig, TreeGraph, ValidationError, apply_kernel,
                     build_gaussian_kernel, full_cost_tensor)
from motsink.core import TransposedKernel, edge_kernels
from motsink.dense import kernel_tensor

from conftest import random_measure


class TestDiscreteMeasure:
    def test_renormalizes_small_rounding(self):
        m = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.499999999])
        assert m.weights.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure([[0.0], [1.0]], [0.5, 0.4])

    def test_rejects_negative_weight(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure([[0.0], [1.0], [2.0]], [0.6, 0.6, -0.2])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure([[0.0], [1.0]], [1.0])

    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            DiscreteMeasure(np.zeros((0, 1)), [])

    def test_single_atom_and_coincident_points(self):
        assert DiscreteMeasure([[3.0]], [1.0]).n == 1
        m = DiscreteMeasure([[0.0], [0.0]], [0.5, 0.5])
        assert m.n == 2

    def test_is_immutable_and_copies_input(self):
        pts = np.zeros((2, 1))
        m = DiscreteMeasure(pts, [0.5, 0.5])
        pts[0, 0] = 7.0
        assert m.points[0, 0] == 0.0
        with pytest.raises(ValueError):
            m.weights[0] = 1.0

    @given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=8))
    def test_uniform_constructor_normalized(self, coords):
        m = DiscreteMeasure.uniform(np.array(coords))
        assert abs(m.weights.sum() - 1.0) < 1e-12
        assert m.dim == 1


class TestGraphs:
    def test_tree_structure(self):
        t = TreeGraph([-1, 0, 1, 1, 2, 4, 4])
        assert t.children[1] == (2, 3)
        assert t.leaves == frozenset({0, 3, 5, 6})
        assert len(t.edges) == 6
        assert t.preorder == (0, 1, 2, 4, 5, 6, 3)

    def test_preorder_puts_parents_first(self, rng):
        for _ in range(20):
            K = int(rng.integers(2, 12))
            par = [-1] + [int(rng.integers(0, k)) for k in range(1, K)]
            t = TreeGraph(par)
            pos = {k: i for i, k in enumerate(t.preorder)}
            assert all(pos[par[k]] < pos[k] for k in range(1, K))

    def test_arbitrary_labelling_and_edges(self):
        t = TreeGraph([2, 2, -1, 0])
        assert t.root == 2 and t.preorder[0] == 2
        t2 = TreeGraph.from_edges(4, [(0, 1), (1, 2), (1, 3)])
        assert t2.parent == (-1, 0, 1, 1)

    @pytest.mark.parametrize("parent", [[-1, -1, 0], [0, 1, 0], [-1, 3, 1], [-1]])
    def test_invalid_trees(self, parent):
        with pytest.raises(ValidationError):
            TreeGraph(parent)

    def test_circle(self):
        c = CircleGraph(5)
        assert c.edges[-1] == (4, 0)
        assert c.distance(1, 3) == 2
        assert c.distance(3, 1) == 3
        assert all(0 <= c.distance(a, b) <= 4 for a in range(5) for b in range(5))
        with pytest.raises(ValidationError):
            CircleGraph(2)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(eta=0), dict(eta=-1), dict(eta=1, delta=0),
                                    dict(eta=1, max_iterations=0), dict(eta=1, kernel="fft")])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            SinkhornConfig(**kw)


class TestKernels:
    def test_trivial_entries(self):
        assert build_gaussian_kernel([[0.0]], [[0.0]], 3.0).to_dense()[0, 0] == 1.0
        k = build_gaussian_kernel([[0.0]], [[0.8]], 0.25)
        assert k.to_dense()[0, 0] == pytest.approx(0.07730474044329974, rel=1e-15)

    def test_symmetric_unit_diagonal(self, rng):
        x = rng.uniform(size=(6, 2))
        A = build_gaussian_kernel(x, x, 0.3).to_dense()
        np.testing.assert_allclose(A, A.T, rtol=0, atol=0)
        np.testing.assert_array_equal(np.diag(A), 1.0)
        assert np.all((A > 0) & (A <= 1))

    def test_apply_against_loops(self, rng):
        x, y = rng.uniform(size=(5, 2)), rng.uniform(size=(4, 2))
        k = build_gaussian_kernel(x, y, 0.7)
        v = rng.standard_normal(4)
        ref = [sum(np.exp(-np.sum((x[i] - y[j]) ** 2) / 0.7) * v[j] for j in range(4)) for i in range(5)]
        np.testing.assert_allclose(apply_kernel(k, v), ref, rtol=1e-14)
        np.testing.assert_array_equal(apply_kernel(k, np.zeros(4)), 0.0)
        assert apply_kernel(build_gaussian_kernel([[1.0]], [[1.0]], 1.0), [3.0])[0] == 3.0

    def test_transpose_consistency(self, rng):
        x, y = rng.uniform(size=(7, 1)), rng.uniform(size=(5, 1))
        k = DirectKernel(x, y, 0.2)
        a, b = rng.standard_normal(5), rng.standard_normal(7)
        assert k.apply(a) @ b == pytest.approx(a @ k.apply_t(b), rel=1e-12)

    def test_errors(self):
        with pytest.raises(ValidationError):
            build_gaussian_kernel([[0.0, 1.0]], [[0.0]], 1.0)
        with pytest.raises(ValidationError):
            build_gaussian_kernel([[0.0]], [[0.0]], 0.0)
        with pytest.raises(ValidationError):
            apply_kernel(build_gaussian_kernel([[0.0]], [[0.0], [1.0]], 1.0), [1.0])

    def test_weighted_kernel_is_power(self, rng):
        x = rng.uniform(size=(4, 2))
        plain = DirectKernel(x, x, 0.1).to_dense()
        np.testing.assert_allclose(DirectKernel(x, x, 0.1, weight=0.3).to_dense(), plain ** 0.3, rtol=1e-12)
        np.testing.assert_array_equal(DirectKernel(x, x, 0.1, weight=0.0).to_dense(), 1.0)

    def test_counting_and_transposed(self, rng):
        k = CountingKernel(DirectKernel(rng.uniform(size=(3, 1)), rng.uniform(size=(2, 1)), 1.0))
        k.apply(np.ones(2)); k.apply_t(np.ones(3)); k.to_dense()
        assert k.calls == 3
        t = TransposedKernel(k.base)
        np.testing.assert_array_equal(t.to_dense(), k.base.to_dense().T)
        assert t.shape == (2, 3)

    def test_edge_kernels_share_by_identity(self, rng):
        m = random_measure(rng, 3, 1)
        ks = edge_kernels([m.points] * 3, [(0, 1), (1, 2)], 1.0)
        assert ks[(0, 1)] is ks[(1, 2)]


class TestCostTensor:
    def test_trivial_cases(self):
        a, b = DiscreteMeasure([[0.0]], [1.0]), DiscreteMeasure([[1.0]], [1.0])
        assert full_cost_tensor([a, b], [(0, 1)])[0, 0] == 1.0
        z = DiscreteMeasure([[0.0], [0.0]], [0.5, 0.5])
        assert np.all(full_cost_tensor([z] * 3, CircleGraph(3)) == 0)

    def test_chain_value(self):
        ms = [DiscreteMeasure([[v]], [1.0]) for v in (0.0, 1.0, 3.0)]
        C = full_cost_tensor(ms, TreeGraph([-1, 0, 1]))
        assert C[0, 0, 0] == 5.0

    def test_against_loops_and_kernel(self, rng):
        ms = [random_measure(rng, n, 2) for n in (2, 3, 2, 3)]
        tree = TreeGraph([-1, 0, 0, 2])
        C = full_cost_tensor(ms, tree)
        for idx in np.ndindex(*C.shape):
            ref = sum(np.sum((ms[a].points[idx[a]] - ms[b].points[idx[b]]) ** 2) for a, b in tree.edges)
            assert C[idx] == pytest.approx(ref, rel=1e-13)
        np.testing.assert_allclose(kernel_tensor(ms, tree, 0.4), np.exp(-C / 0.4), rtol=1e-12)

    def test_complete_graph_edges(self, rng):
        ms = [random_measure(rng, 2, 1) for _ in range(3)]
        C = full_cost_tensor(ms, [(0, 1), (0, 2), (1, 2)])
        assert C.shape == (2, 2, 2)

    def test_cap(self):
        m = DiscreteMeasure.uniform(np.zeros((10, 1)))
        with pytest.raises(OracleSizeError):
            full_cost_tensor([m] * 4, CircleGraph(4), max_entries=9999)
