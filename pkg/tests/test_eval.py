import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzembed.data import Metric, RngState
from fuzzembed.evaluate import (
    neighbor_preservation,
    normalized_procrustes,
    procrustes_align,
    subsample_indices,
    subsample_stability,
)

EUCLID = Metric("euclidean")


def rotation_2d(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def grid_search_procrustes_2d(X, Y, n_angles=30000):
    """Exhaustive oracle: scan rotation angle (both chiralities), with the
    closed-form optimal scale and translation per angle."""
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    x2 = np.sum(Xc**2)
    y2 = np.sum(Yc**2)
    best = np.inf
    for theta in np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False):
        R = rotation_2d(theta)
        for refl in (1.0, -1.0):
            Rr = R @ np.diag([1.0, refl])
            tr = float(np.sum(Xc * (Yc @ Rr.T)))
            s = max(tr / y2, 0.0)
            err = x2 - 2 * s * tr + s * s * y2
            best = min(best, err)
    return np.sqrt(max(best, 0.0))


def random_rigid(X, rng, allow_reflection=True):
    theta = rng.uniform(0, 2 * np.pi)
    R = rotation_2d(theta)
    if allow_reflection and rng.random() < 0.5:
        R = R @ np.diag([1.0, -1.0])
    s = rng.uniform(0.2, 5.0)
    t = rng.normal(0, 10, 2)
    return s * (X @ R.T) + t


class TestProcrustesAlign:
    def test_identity(self):
        X = np.random.default_rng(0).normal(0, 1, (10, 2))
        res = procrustes_align(X, X)
        assert res.distance == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(res.rotation, np.eye(2), atol=1e-12)
        assert res.scale == pytest.approx(1.0, rel=1e-12)

    def test_recovers_rigid_motion(self):
        rng = np.random.default_rng(1)
        X = rng.normal(0, 2, (50, 2))
        for _ in range(10):
            Y = random_rigid(X, rng)
            res = procrustes_align(X, Y)
            assert res.distance <= 1e-8
            aligned = res.transform(Y)
            assert np.allclose(aligned, X, atol=1e-8)

    def test_orthogonal_rotation(self):
        rng = np.random.default_rng(2)
        X = rng.normal(0, 1, (20, 3))
        Y = X + rng.normal(0, 0.3, X.shape)
        res = procrustes_align(X, Y)
        assert np.allclose(res.rotation.T @ res.rotation, np.eye(3), atol=1e-10)

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            X = rng.normal(0, 1, (5, 2))
            Y = X + rng.normal(0, 0.4, (5, 2))
            got = procrustes_align(X, Y).distance
            oracle = grid_search_procrustes_2d(X, Y)
            assert got == pytest.approx(oracle, abs=1e-4)
            assert got <= oracle + 1e-12  # SVD optimum can only be better

    def test_reflection_restriction(self):
        rng = np.random.default_rng(4)
        X = rng.normal(0, 1, (12, 2))
        Y = random_rigid(X, rng, allow_reflection=False)
        Y_flipped = Y @ np.diag([1.0, -1.0])
        free = procrustes_align(X, Y_flipped, allow_reflection=True)
        strict = procrustes_align(X, Y_flipped, allow_reflection=False)
        assert free.distance <= 1e-8
        assert strict.distance > free.distance
        assert np.linalg.det(strict.rotation) == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_rejected(self):
        X = np.ones((5, 2))
        Y = np.random.default_rng(0).normal(0, 1, (5, 2))
        with pytest.raises(ValueError, match="degenerate"):
            procrustes_align(X, Y)

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            procrustes_align(np.zeros((3, 2)), np.zeros((4, 2)))
        with pytest.raises(ValueError):
            procrustes_align(np.zeros((1, 2)), np.zeros((1, 2)))


class TestNormalizedProcrustes:
    def test_identical(self):
        X = np.random.default_rng(0).normal(0, 1, (30, 2))
        assert normalized_procrustes(X, X) == pytest.approx(0.0, abs=1e-12)

    def test_scale_invariance(self):
        X = np.random.default_rng(1).normal(0, 1, (30, 2))
        assert normalized_procrustes(X, 1000.0 * X) == pytest.approx(0.0, abs=1e-10)

    def test_hand_pipeline(self):
        rng = np.random.default_rng(2)
        X = rng.normal(0, 2, (8, 2))
        Y = X + rng.normal(0, 0.5, (8, 2))

        def norm(M):
            Mc = M - M.mean(axis=0)
            return Mc / np.sqrt((np.linalg.norm(Mc, axis=1) ** 2).mean())

        expected = procrustes_align(norm(X), norm(Y)).distance / 8
        assert normalized_procrustes(X, Y) == pytest.approx(expected, rel=1e-12)

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=20, deadline=None)
    def test_invariant_to_rigid_motion_of_either_argument(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(0, 1, (20, 2))
        Y = X + rng.normal(0, 0.3, (20, 2))
        base = normalized_procrustes(X, Y)
        assert abs(normalized_procrustes(random_rigid(X, rng), Y) - base) <= 1e-8
        assert abs(normalized_procrustes(X, random_rigid(Y, rng)) - base) <= 1e-8

    def test_symmetry_after_normalization(self):
        rng = np.random.default_rng(5)
        X = rng.normal(0, 1, (25, 2))
        Y = X + rng.normal(0, 0.4, (25, 2))
        assert abs(normalized_procrustes(X, Y) - normalized_procrustes(Y, X)) <= 1e-8


class TestSubsampleStability:
    def embed_fn_factory(self):
        # cheap deterministic stand-in for the full pipeline: a fixed linear
        # projection of the data (stable under subsampling by construction)
        proj = np.array([[1.0, 0.2], [0.1, -0.8], [0.3, 0.5], [0.0, 1.0],
                         [0.7, 0.0]])

        def embed_fn(X):
            return X @ proj[: X.shape[1]]

        return embed_fn

    def test_fraction_one_zero_distance(self, small_blobs):
        X, _ = small_blobs
        rows = subsample_stability(X, [1.0], self.embed_fn_factory(),
                                   trials=2, rng=RngState(0))
        assert rows[0].mean == pytest.approx(0.0, abs=1e-12)

    def test_two_fractions_positive_finite(self, small_blobs):
        X, _ = small_blobs
        noisy_proj = self.embed_fn_factory()

        def embed_fn(Xs):
            base = noisy_proj(Xs)
            jitter = np.random.default_rng(Xs.shape[0]).normal(0, 0.05, base.shape)
            return base + jitter

        rows = subsample_stability(X, [0.1, 0.5], embed_fn, trials=2,
                                   rng=RngState(1))
        assert len(rows) == 2
        for r in rows:
            assert np.isfinite(r.mean) and r.mean > 0.0

    def test_compositionality_single_fraction(self, small_blobs):
        X, _ = small_blobs
        embed_fn = self.embed_fn_factory()
        rows = subsample_stability(X, [0.5], embed_fn, trials=3, rng=RngState(7))
        # direct evaluation of the protocol body
        full = embed_fn(X)
        dists = []
        for t in range(3):
            gen = RngState(7).stream(f"subsample-{0.5!r}-{t}")
            keep = subsample_indices(X.shape[0], 0.5, gen)
            dists.append(normalized_procrustes(full[keep], embed_fn(X[keep])))
        assert rows[0].distances == tuple(dists)

    def test_validation(self, small_blobs):
        X, _ = small_blobs
        fn = self.embed_fn_factory()
        with pytest.raises(ValueError, match=r"\(0, 1\]"):
            subsample_stability(X, [1.5], fn, 1, RngState(0))
        with pytest.raises(ValueError, match="ascending"):
            subsample_stability(X, [0.5, 0.1], fn, 1, RngState(0))
        with pytest.raises(ValueError, match="below the minimum"):
            subsample_stability(X, [0.01], fn, 1, RngState(0), min_subsample=16)
        with pytest.raises(ValueError):
            subsample_stability(X, [0.5], fn, 0, RngState(0))


class TestNeighborPreservation:
    def test_lossless_embedding(self):
        rng = np.random.default_rng(0)
        X = np.zeros((60, 5))
        X[:, :2] = rng.normal(0, 1, (60, 2))
        np_score = neighbor_preservation(X, X[:, :2], EUCLID, 10)
        assert np_score == 1.0

    def test_random_embedding_matches_expectation(self):
        # with Y independent of X each true neighbor lands in the embedded
        # top-k with chance ~k/(N-1)
        rng = np.random.default_rng(1)
        n, k = 400, 10
        X = rng.normal(0, 1, (n, 8))
        Y = rng.normal(0, 1, (n, 2))
        got = neighbor_preservation(X, Y, EUCLID, k)
        p = k / (n - 1)
        sigma = np.sqrt(p * (1 - p) / (n * k))  # slightly optimistic (overlap)
        assert abs(got - p) <= 5 * sigma

    def test_bounds(self, small_blobs):
        X, _ = small_blobs
        Y = np.random.default_rng(2).normal(0, 1, (X.shape[0], 2))
        val = neighbor_preservation(X, Y, EUCLID, 7)
        assert 0.0 <= val <= 1.0

    def test_validation(self):
        X = np.zeros((10, 2))
        with pytest.raises(ValueError):
            neighbor_preservation(X, np.zeros((9, 2)), EUCLID, 3)
        with pytest.raises(ValueError):
            neighbor_preservation(X, np.zeros((10, 2)), EUCLID, 10)
