"""Sparse matrix core: CSR storage, block extraction, residuals, I/O, spectral radius."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp


class MatrixMarketError(ValueError):
    """Raised when a Matrix Market file cannot be turned into a square CSR matrix."""


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square matrix in compressed-sparse-row form.

    Structural nonzeros define the graph of the matrix, so explicitly stored
    zeros are kept: they create message-graph edges that carry zero messages
    but still cost work.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        ro = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        va = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "row_offsets", ro)
        object.__setattr__(self, "col_indices", ci)
        object.__setattr__(self, "values", va)
        if ro.shape != (self.n + 1,):
            raise ValueError(f"row_offsets must have length n+1={self.n + 1}")
        if ro[0] != 0 or ro[-1] != va.size or ci.size != va.size:
            raise ValueError("row_offsets inconsistent with stored entries")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n:
                raise ValueError("column index out of range")
            rows = np.repeat(np.arange(self.n), np.diff(ro))
            same_row = rows[1:] == rows[:-1]
            if np.any(np.diff(ci)[same_row] <= 0):
                raise ValueError("column indices must be strictly increasing within a row")
        for arr in (ro, ci, va):
            arr.flags.writeable = False

    # construction -----------------------------------------------------------

    @classmethod
    def from_scipy(cls, M) -> "SparseMatrix":
        M = sp.csr_matrix(M, dtype=np.float64)
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"matrix must be square, got shape {M.shape}")
        M = M.copy()
        M.sum_duplicates()
        M.sort_indices()
        return cls(M.shape[0], M.indptr, M.indices, M.data)

    @classmethod
    def from_dense(cls, D, keep_zeros: bool = False) -> "SparseMatrix":
        """Build from a dense array; zeros are dropped unless ``keep_zeros``."""
        D = np.asarray(D, dtype=np.float64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError(f"matrix must be square, got shape {D.shape}")
        if keep_zeros:
            n = D.shape[0]
            return cls(n, np.arange(0, n * n + 1, n), np.tile(np.arange(n), n), D.ravel())
        return cls.from_scipy(sp.csr_matrix(D))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, np.arange(n + 1), np.arange(n), np.ones(n))

    # views ------------------------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def to_scipy(self) -> sp.csr_matrix:
        if "csr" not in self._cache:
            M = sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=self.shape)
            M.has_sorted_indices = True
            self._cache["csr"] = M
        return self._cache["csr"]

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry (COO row array)."""
        if "rows" not in self._cache:
            self._cache["rows"] = np.repeat(np.arange(self.n), np.diff(self.row_offsets))
        return self._cache["rows"]

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def diagonal_positions(self) -> np.ndarray:
        """CSR position of each diagonal entry, or -1 when not stored."""
        if "diagpos" not in self._cache:
            pos = np.full(self.n, -1, dtype=np.int64)
            rows = self.row_indices()
            hit = np.nonzero(rows == self.col_indices)[0]
            pos[rows[hit]] = hit
            self._cache["diagpos"] = pos
        return self._cache["diagpos"]

    def transpose_positions(self) -> np.ndarray:
        """Paired-edge index: for entry (i, j), the position of (j, i) or -1."""
        if "tpos" not in self._cache:
            rows = self.row_indices()
            keys = rows * self.n + self.col_indices  # sorted, since CSR is canonical
            tkeys = self.col_indices * self.n + rows
            idx = np.searchsorted(keys, tkeys)
            idx_c = np.minimum(idx, max(keys.size - 1, 0))
            found = (idx < keys.size) & (keys[idx_c] == tkeys) if keys.size else np.zeros(0, bool)
            self._cache["tpos"] = np.where(found, idx_c, -1).astype(np.int64)
        return self._cache["tpos"]

    def matvec(self, x) -> np.ndarray:
        return self.to_scipy() @ np.asarray(x, dtype=np.float64)

    def __matmul__(self, x):
        return self.matvec(x)

    def abs_offdiag_scaled(self) -> "SparseMatrix":
        """|R~| with entries |A_ij| / |A_ii| off the diagonal and zero on it."""
        d = np.abs(self.diagonal())
        if np.any(d == 0):
            raise ZeroDivisionError("zero on the diagonal")
        rows = self.row_indices()
        vals = np.abs(self.values) / d[rows]
        vals[rows == self.col_indices] = 0.0
        return SparseMatrix(self.n, self.row_offsets, self.col_indices, vals)

    def structurally_symmetric(self) -> bool:
        return bool(np.all(self.transpose_positions() >= 0))

    def __repr__(self):
        return f"SparseMatrix(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True)
class DenseBlock:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (len(self.rows), len(self.cols)):
            raise ValueError("block data does not match its index lists")


def as_matrix(A) -> SparseMatrix:
    """Coerce a dense array, scipy sparse matrix or SparseMatrix."""
    if isinstance(A, SparseMatrix):
        return A
    if sp.issparse(A):
        return SparseMatrix.from_scipy(A)
    return SparseMatrix.from_dense(A)


def _check_indices(idx: Sequence[int], n: int, what: str) -> np.ndarray:
    arr = np.asarray(idx, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be a flat index list")
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise IndexError(f"{what} out of range [0, {n})")
    if np.any(np.diff(arr) <= 0):
        raise ValueError(f"{what} must be sorted ascending without repeats")
    return arr


def extract_block(A: SparseMatrix, rows: Sequence[int], cols: Sequence[int]) -> DenseBlock:
    """Dense submatrix ``A[rows, cols]`` with absent entries filled by zero."""
    r = _check_indices(rows, A.n, "rows")
    c = _check_indices(cols, A.n, "cols")
    data = A.to_scipy()[r][:, c].toarray()
    return DenseBlock(tuple(int(i) for i in r), tuple(int(j) for j in c), data)


def residual_inf_norm(A: SparseMatrix, x, b) -> float:
    """max_i |b_i - (A x)_i|."""
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if x.shape != (A.n,) or b.shape != (A.n,):
        raise ValueError(f"dimension mismatch: A is {A.n}x{A.n}, x {x.shape}, b {b.shape}")
    if A.n == 0:
        return 0.0
    return float(np.max(np.abs(b - A.matvec(x))))


# Matrix Market -------------------------------------------------------------


def load_matrix_market(path) -> SparseMatrix:
    """Read a coordinate Matrix Market file into canonical CSR.

    Duplicate entries are summed, as the format prescribes.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        M = scipy.io.mmread(path)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    except Exception as exc:  # malformed headers surface as assorted errors
        raise MatrixMarketError(f"{path}: cannot parse ({exc})") from exc
    if not sp.issparse(M):
        raise MatrixMarketError(f"{path}: only the coordinate format is supported")
    if np.iscomplexobj(M.data):
        raise MatrixMarketError(f"{path}: complex matrices are not supported")
    if M.shape[0] != M.shape[1]:
        raise MatrixMarketError(f"{path}: matrix is not square {M.shape}")
    return SparseMatrix.from_scipy(M)


def save_matrix_market(path, A: SparseMatrix, comment: str = "") -> None:
    """Write ``A`` in coordinate/real/general form with round-trip precision."""
    coo = A.to_scipy().tocoo()
    buf = io.StringIO()
    buf.write("%%MatrixMarket matrix coordinate real general\n")
    for line in comment.splitlines():
        buf.write(f"%{line}\n")
    buf.write(f"{A.n} {A.n} {A.nnz}\n")
    for i, j, v in zip(coo.row, coo.col, coo.data):
        buf.write(f"{i + 1} {j + 1} {float(v)!r}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


# spectral radius -----------------------------------------------------------


@dataclass(frozen=True)
class SpectralEstimate:
    value: float
    iterations: int
    converged: bool

    def __float__(self):
        return self.value


def spectral_radius(M, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> SpectralEstimate:
    """Dominant eigenvalue of an elementwise-nonnegative matrix by power iteration.

    Iterates on ``M + I``: the shift keeps the Perron root strictly dominant
    for bipartite patterns (grid stencils), where plain power iteration would
    oscillate between +rho and -rho.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(M, SparseMatrix):
        Ms = M.to_scipy()
    elif sp.issparse(M):
        Ms = sp.csr_matrix(M)
    else:
        Ms = sp.csr_matrix(np.asarray(M, dtype=np.float64))
    if Ms.shape[0] != Ms.shape[1]:
        raise ValueError("matrix must be square")
    if Ms.nnz and Ms.data.min() < 0:
        raise ValueError("power iteration here requires a nonnegative matrix")
    n = Ms.shape[0]
    if n == 0 or Ms.nnz == 0 or not np.any(Ms.data):
        return SpectralEstimate(0.0, 0, True)

    x = np.random.default_rng(seed).uniform(0.5, 1.5, size=n)
    x /= np.linalg.norm(x)
    est = np.inf
    for it in range(1, max_iter + 1):
        y = Ms @ x + x
        # Rayleigh quotient: second-order accurate for symmetric M
        new = float(x @ y) - 1.0
        nrm = np.linalg.norm(y)
        x = y / nrm
        if abs(new - est) <= tol * max(abs(new), 1e-300):
            return SpectralEstimate(max(new, 0.0), it, True)
        est = new
    return SpectralEstimate(max(est, 0.0), max_iter, False)
