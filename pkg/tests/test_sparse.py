import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from belief_solve.sparse import (
    MatrixMarketError,
    SparseMatrix,
    extract_block,
    load_matrix_market,
    residual_inf_norm,
    save_matrix_market,
    spectral_radius,
)


def test_from_dense_drops_zeros_unless_asked():
    D = np.array([[2.0, 0.0], [1.0, 3.0]])
    assert SparseMatrix.from_dense(D).nnz == 3
    assert SparseMatrix.from_dense(D, keep_zeros=True).nnz == 4


def test_rejects_unsorted_columns():
    with pytest.raises(ValueError):
        SparseMatrix(2, np.array([0, 2, 3]), np.array([1, 0, 1]), np.ones(3))


def test_rejects_non_square():
    with pytest.raises(ValueError):
        SparseMatrix.from_dense(np.ones((2, 3)))


def test_arrays_are_read_only():
    A = SparseMatrix.identity(3)
    with pytest.raises(ValueError):
        A.values[0] = 5.0


def test_transpose_positions_pairs_entries():
    D = np.array([[4.0, 1.0, 0.0], [0.0, 4.0, 2.0], [3.0, 5.0, 4.0]])
    A = SparseMatrix.from_dense(D)
    rows, cols = A.row_indices(), A.col_indices
    tp = A.transpose_positions()
    for e in range(A.nnz):
        if tp[e] >= 0:
            assert (rows[tp[e]], cols[tp[e]]) == (cols[e], rows[e])
        else:
            assert D[cols[e], rows[e]] == 0
    assert not A.structurally_symmetric()


def test_extract_block_fills_absent_with_zero():
    D = np.arange(16, dtype=float).reshape(4, 4)
    D[1, 2] = 0
    blk = extract_block(SparseMatrix.from_dense(D), [1, 3], [0, 2])
    np.testing.assert_array_equal(blk.data, [[4.0, 0.0], [12.0, 14.0]])
    with pytest.raises(IndexError):
        extract_block(SparseMatrix.from_dense(D), [4], [0])
    with pytest.raises(ValueError):
        extract_block(SparseMatrix.from_dense(D), [2, 1], [0])


def test_residual_dimension_mismatch():
    with pytest.raises(ValueError):
        residual_inf_norm(SparseMatrix.identity(3), np.zeros(2), np.zeros(3))


def test_abs_offdiag_scaled():
    D = np.array([[2.0, -1.0], [3.0, -4.0]])
    R = SparseMatrix.from_dense(D).abs_offdiag_scaled().to_dense()
    np.testing.assert_allclose(R, [[0.0, 0.5], [0.75, 0.0]])


@given(hnp.arrays(np.float64, (6, 6), elements=st.floats(-5, 5, allow_nan=False)),
       hnp.arrays(np.float64, 6, elements=st.floats(-5, 5, allow_nan=False)))
def test_matvec_matches_dense(D, x):
    A = SparseMatrix.from_dense(D)
    np.testing.assert_allclose(A @ x, D @ x, atol=1e-12)


def test_matrix_market_round_trip(tmp_path, rng):
    D = rng.normal(size=(5, 5)) * (rng.random((5, 5)) < 0.5)
    A = SparseMatrix.from_dense(D)
    path = tmp_path / "a.mtx"
    save_matrix_market(path, A, comment="round trip")
    B = load_matrix_market(path)
    np.testing.assert_array_equal(B.to_dense(), A.to_dense())


def test_matrix_market_sums_duplicates(tmp_path):
    path = tmp_path / "dup.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.5\n1 1 2.5\n2 2 1\n")
    np.testing.assert_array_equal(load_matrix_market(path).to_dense(), [[4.0, 0.0], [0.0, 1.0]])


def test_matrix_market_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_matrix_market(tmp_path / "missing.mtx")
    bad = tmp_path / "bad.mtx"
    bad.write_text("not a matrix market file\n")
    with pytest.raises(MatrixMarketError):
        load_matrix_market(bad)
    rect = tmp_path / "rect.mtx"
    rect.write_text("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n")
    with pytest.raises(MatrixMarketError):
        load_matrix_market(rect)


def test_spectral_radius_bipartite_pattern():
    # path graph: eigenvalues +-rho, plain power iteration would oscillate
    n = 20
    P = sp.diags([1, 1], [-1, 1], shape=(n, n))
    est = spectral_radius(P)
    assert est.converged
    np.testing.assert_allclose(est.value, 2 * np.cos(np.pi / (n + 1)), rtol=1e-8)


def test_spectral_radius_rejects_negative():
    with pytest.raises(ValueError):
        spectral_radius(np.array([[0.0, -1.0], [1.0, 0.0]]))


@settings(max_examples=30, deadline=None)
@given(hnp.arrays(np.float64, (5, 5), elements=st.floats(0, 3, allow_nan=False)))
def test_spectral_radius_matches_eigvals(M):
    ref = np.max(np.abs(np.linalg.eigvals(M)))
    est = spectral_radius(M, tol=1e-13, max_iter=200_000)
    if est.converged:
        assert est.value == pytest.approx(ref, rel=1e-4, abs=1e-6)
