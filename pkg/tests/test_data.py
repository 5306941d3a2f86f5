import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fuzzembed.data import (
    DataError,
    DataMatrix,
    Metric,
    RngState,
    compute_distance,
)
from fuzzembed.io import load_matrix, write_matrix

finite_vectors = arrays(
    np.float64,
    st.integers(min_value=1, max_value=8),
    elements=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
)


class TestComputeDistance:
    def test_euclidean_345(self):
        assert compute_distance(Metric("euclidean"), (0.0, 0.0), (3.0, 4.0)) == 5.0

    def test_cosine_identical_direction(self):
        assert compute_distance(Metric("cosine"), (1.0, 0.0), (1.0, 0.0)) == 0.0

    def test_manhattan_hand_sum(self):
        # |1-4| + |2-0| + |3-3| = 5
        assert compute_distance(Metric("manhattan"), (1, 2, 3), (4, 0, 3)) == 5.0

    def test_squared_euclidean(self):
        assert compute_distance(Metric("squared-euclidean"), (0, 0), (3, 4)) == 25.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DataError, match="dimension mismatch"):
            compute_distance(Metric("euclidean"), (1.0, 2.0), (1.0, 2.0, 3.0))

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError, match="unknown metric"):
            Metric("chebyshev")

    def test_cosine_zero_vector_convention(self):
        m = Metric("cosine")
        assert compute_distance(m, (0.0, 0.0), (1.0, 2.0)) == 1.0
        assert compute_distance(m, (0.0, 0.0), (0.0, 0.0)) == 0.0

    @pytest.mark.parametrize("kind", ["euclidean", "squared-euclidean", "manhattan", "cosine"])
    @given(data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_metric_axioms(self, kind, data):
        x = data.draw(finite_vectors)
        y = data.draw(arrays(np.float64, x.shape,
                             elements=st.floats(min_value=-1e6, max_value=1e6,
                                                allow_nan=False)))
        m = Metric(kind)
        dxy = compute_distance(m, x, y)
        assert dxy >= 0.0
        assert dxy == compute_distance(m, y, x)  # symmetry, exact
        assert compute_distance(m, x, x) == 0.0

    def test_pairwise_matches_scalar(self):
        # the blocked pairwise kernels may differ from the direct per-pair
        # formulas by float round-off only
        rng = np.random.default_rng(0)
        X = rng.normal(0, 2, (6, 3))
        for kind in ("euclidean", "squared-euclidean", "manhattan", "cosine"):
            m = Metric(kind)
            D = m.pairwise(X)
            for i in range(6):
                for j in range(6):
                    assert D[i, j] == pytest.approx(compute_distance(m, X[i], X[j]),
                                                    rel=1e-7, abs=1e-6)


class TestDataMatrix:
    def test_basic_shape(self):
        dm = DataMatrix(np.ones((3, 2)))
        assert dm.n_samples == 3 and dm.n_features == 2

    def test_rejects_nan(self):
        arr = np.ones((2, 2))
        arr[1, 0] = np.nan
        with pytest.raises(DataError, match="row 1, column 0"):
            DataMatrix(arr)

    def test_rejects_empty(self):
        with pytest.raises(DataError, match="no rows"):
            DataMatrix(np.empty((0, 3)))

    def test_sparse_input_densified(self):
        import scipy.sparse as sp

        dm = DataMatrix(sp.csr_matrix(np.eye(3)))
        assert dm.values.shape == (3, 3)

    def test_immutable(self):
        dm = DataMatrix(np.ones((2, 2)))
        with pytest.raises(ValueError):
            dm.values[0, 0] = 7.0


class TestMatrixIO:
    def test_csv_three_rows(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("1,2\n3,4\n5,6\n")
        dm = load_matrix(str(p))
        assert dm.n_samples == 3 and dm.n_features == 2
        assert dm.values[2, 1] == 6.0

    def test_whitespace_and_header(self, tmp_path):
        p = tmp_path / "m.txt"
        p.write_text("colA colB\n1 2\n3 4\n")
        dm = load_matrix(str(p))
        assert dm.n_samples == 2

    def test_empty_file(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("")
        with pytest.raises(DataError, match="no rows"):
            load_matrix(str(p))

    def test_nan_token_names_cell(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("1,2\n3,nan\n")
        with pytest.raises(DataError, match="row 1, column 1"):
            load_matrix(str(p))

    def test_ragged_row_named(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(DataError, match="ragged row 1"):
            load_matrix(str(p))

    def test_unparseable_token_named(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("1,2\n3,zap\n")
        with pytest.raises(DataError, match="row 1, column 1"):
            load_matrix(str(p))

    @given(arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 6)),
                  elements=st.floats(min_value=-1e12, max_value=1e12,
                                     allow_nan=False)))
    @settings(max_examples=25, deadline=None)
    def test_binary_round_trip_bit_exact(self, arr):
        import tempfile, os

        fd, path = tempfile.mkstemp(suffix=".bin")
        os.close(fd)
        try:
            write_matrix(path, arr, "binary")
            with open(path, "rb") as fh:
                raw1 = fh.read()
            loaded = load_matrix(path, "binary")
            write_matrix(path, loaded, "binary")
            with open(path, "rb") as fh:
                raw2 = fh.read()
            assert raw1 == raw2
            assert np.array_equal(loaded.values, arr)
        finally:
            os.remove(path)

    def test_text_round_trip_values(self, tmp_path):
        rng = np.random.default_rng(5)
        arr = rng.normal(0, 1e3, (7, 3))
        p = str(tmp_path / "m.csv")
        write_matrix(p, arr, "text")
        assert np.array_equal(load_matrix(p).values, arr)


class TestRngState:
    def test_equal_seeds_equal_streams(self):
        a = RngState(1234).stream("edge-sampling").integers(0, 2**63, 1_000_000)
        b = RngState(1234).stream("edge-sampling").integers(0, 2**63, 1_000_000)
        assert np.array_equal(a, b)

    def test_different_names_differ(self):
        a = RngState(7).stream("alpha").integers(0, 2**63, 100)
        b = RngState(7).stream("beta").integers(0, 2**63, 100)
        assert not np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = RngState(1).stream("x").integers(0, 2**63, 100)
        b = RngState(2).stream("x").integers(0, 2**63, 100)
        assert not np.array_equal(a, b)

    def test_kernel_seed_stable(self):
        assert RngState(9).kernel_seed("negative-sampling") == \
            RngState(9).kernel_seed("negative-sampling")
