import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzembed.data import Metric, RngState
from fuzzembed.knn import exact_knn, knn_graph, nn_descent, recall

EUCLID = Metric("euclidean")


def brute_force_knn(X, k):
    """Independent O(N^2) oracle with explicit (distance, index) sorting."""
    n = X.shape[0]
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        cand = []
        for j in range(n):
            if j == i:
                continue
            cand.append((float(np.sqrt(np.sum((X[i] - X[j]) ** 2))), j))
        cand.sort()
        out[i] = [j for _, j in cand[:k]]
    return out


class TestExactKnn:
    def test_three_points_by_inspection(self):
        X = np.array([[0.0], [1.0], [10.0]])
        g = exact_knn(X, EUCLID, 1)
        assert g.indices.ravel().tolist() == [1, 0, 1]

    def test_k_equals_n_minus_one(self):
        rng = np.random.default_rng(0)
        X = rng.normal(0, 1, (8, 3))
        g = exact_knn(X, EUCLID, 7)
        for i in range(8):
            assert sorted(g.indices[i]) == sorted(set(range(8)) - {i})

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(42)
        X = rng.normal(0, 1, (100, 2))
        g = exact_knn(X, EUCLID, 5)
        assert np.array_equal(g.indices, brute_force_knn(X, 5))

    def test_tie_break_by_smaller_index(self):
        # points 1 and 2 are equidistant from 0; index 1 must win
        X = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [5.0, 5.0]])
        g = exact_knn(X, EUCLID, 1)
        assert g.indices[0, 0] == 1

    def test_k_out_of_range_rejected(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValueError):
            exact_knn(X, EUCLID, 4)
        with pytest.raises(ValueError):
            exact_knn(X, EUCLID, 0)

    def test_distances_consistent(self):
        rng = np.random.default_rng(3)
        X = rng.normal(0, 1, (30, 4))
        g = exact_knn(X, EUCLID, 6)
        g.validate()
        for i in range(30):
            for slot, j in enumerate(g.indices[i]):
                d = np.sqrt(np.sum((X[i] - X[j]) ** 2))
                assert g.distances[i, slot] == pytest.approx(d, rel=1e-9, abs=1e-12)


class TestNNDescent:
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=10, deadline=None)
    def test_invariants_any_seed(self, seed):
        rng = np.random.default_rng(1)
        X = rng.normal(0, 1, (40, 3))
        g = nn_descent(X, EUCLID, 5, RngState(seed))
        g.validate()

    def test_identical_points_terminate(self):
        X = np.ones((20, 3))
        g = nn_descent(X, EUCLID, 4, RngState(0))
        g.validate()
        assert (g.distances == 0.0).all()

    def test_k_equals_n_minus_one_is_exact(self):
        rng = np.random.default_rng(7)
        X = rng.normal(0, 1, (25, 4))
        approx = nn_descent(X, EUCLID, 24, RngState(5))
        exact = exact_knn(X, EUCLID, 24)
        assert recall(approx, exact) == 1.0

    def test_recall_on_clusters(self):
        from conftest import gaussian_mixture

        X, _ = gaussian_mixture(400, 8, 5, seed=2)
        approx = nn_descent(X, EUCLID, 10, RngState(3))
        exact = exact_knn(X, EUCLID, 10)
        assert recall(approx, exact) >= 0.9

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(9)
        X = rng.normal(0, 1, (80, 5))
        a = nn_descent(X, EUCLID, 7, RngState(21))
        b = nn_descent(X, EUCLID, 7, RngState(21))
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.distances, b.distances)

    def test_parameter_validation(self):
        X = np.zeros((10, 2))
        with pytest.raises(ValueError):
            nn_descent(X, EUCLID, 3, RngState(0), max_iters=0)
        with pytest.raises(ValueError):
            nn_descent(X, EUCLID, 3, RngState(0), delta=1.5)


class TestKnnGraph:
    def test_small_uses_exact(self):
        rng = np.random.default_rng(0)
        X = rng.normal(0, 1, (50, 3))
        g = knn_graph(X, EUCLID, 5, RngState(0), exact_threshold=100)
        e = exact_knn(X, EUCLID, 5)
        assert np.array_equal(g.indices, e.indices)

    def test_large_uses_descent(self):
        rng = np.random.default_rng(0)
        X = rng.normal(0, 1, (60, 3))
        g = knn_graph(X, EUCLID, 5, RngState(0), exact_threshold=10)
        e = exact_knn(X, EUCLID, 5)
        assert recall(g, e) >= 0.9  # approximate path still close on easy data


class TestCustomMetric:
    def test_registered_dissimilarity(self):
        from fuzzembed.data import Metric, compute_distance

        def chebyshev(X, Y):
            return np.abs(X[:, None, :] - Y[None, :, :]).max(axis=2)

        m = Metric("chebyshev", pairwise_fn=chebyshev)
        assert compute_distance(m, (0.0, 0.0), (2.0, 5.0)) == 5.0
        X = np.random.default_rng(1).normal(0, 1, (30, 4))
        g = exact_knn(X, m, 4)
        g.validate()
        # spot-check against a direct scan of one row
        d0 = chebyshev(X[:1], X)[0]
        d0[0] = np.inf
        assert g.indices[0, 0] == int(np.argmin(d0))
