"""Matrix storage helpers, counted linear operators and small dense factorizations.

Dense matrices are plain ``numpy.ndarray`` objects and sparse matrices are
``scipy.sparse`` CSR matrices. Everything that touches a large matrix inside
the iterative solvers goes through a :class:`LinearOperator`, which counts
single-vector applications so that solver cost can be compared independently
of the machine.
"""
from __future__ import annotations

import os
from typing import Tuple

import numpy as np
import scipy.io
import scipy.sparse as sp

QR_RANK_TOL = 1e-12
SMALL_DENSE_LIMIT = 4096


def as_finite_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a 2-D float array, rejecting empty or non-finite input."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if M.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf")
    return M


def sparse_from_triplets(rows, cols, values, shape) -> sp.csr_matrix:
    """Build a CSR matrix from (row, col, value) triplets.

    Indices must be in range and unique; duplicates are an error rather than
    being summed.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    m, n = shape
    if not (rows.shape == cols.shape == values.shape) or rows.ndim != 1:
        raise ValueError("rows, cols and values must be 1-D of equal length")
    if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
        raise ValueError("triplet index out of range")
    if not np.all(np.isfinite(values)):
        raise ValueError("triplet values contain NaN or Inf")
    flat = rows * n + cols
    if np.unique(flat).size != flat.size:
        raise ValueError("duplicate (row, col) pairs in triplets")
    csr = sp.coo_matrix((values, (rows, cols)), shape=(m, n)).tocsr()
    csr.sort_indices()
    return csr


def l0_norm(E, tol: float = 0.0) -> int:
    """Number of entries with magnitude strictly above ``tol``."""
    if sp.issparse(E):
        return int(np.count_nonzero(np.abs(E.data) > tol))
    return int(np.count_nonzero(np.abs(np.asarray(E)) > tol))


# ----------------------------------------------------------------------------
# Linear operators
# ----------------------------------------------------------------------------


class LinearOperator:
    """Abstract m x n operator with forward and adjoint actions.

    Subclasses implement ``_matmat`` and ``_rmatmat`` on 2-D blocks. The public
    :meth:`apply` / :meth:`apply_adjoint` accept a vector or a block and add the
    number of columns applied to :attr:`counter`.
    """

    def __init__(self, shape: Tuple[int, int]):
        self.shape = (int(shape[0]), int(shape[1]))
        self.counter = 0

    @property
    def nrows(self) -> int:
        return self.shape[0]

    @property
    def ncols(self) -> int:
        return self.shape[1]

    def _matmat(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _rmatmat(self, Y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _run(self, fn, x, expected_rows):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != expected_rows:
            raise ValueError(f"dimension mismatch: operator expects {expected_rows} rows, got {x.shape[0]}")
        if x.ndim == 1:
            self.counter += 1
            return fn(x[:, None])[:, 0]
        self.counter += x.shape[1]
        return fn(x)

    def apply(self, x) -> np.ndarray:
        return self._run(self._matmat, x, self.ncols)

    def apply_adjoint(self, y) -> np.ndarray:
        return self._run(self._rmatmat, y, self.nrows)

    apply_block = apply

    def to_dense(self) -> np.ndarray:
        """Materialize the operator without touching the counter."""
        return self._matmat(np.eye(self.ncols))


class DenseOperator(LinearOperator):
    """Operator backed by a dense array.

    ``matrix`` may be reassigned between applications (same shape) so that one
    operator, and one counter, serves a whole iterative solve.
    """

    def __init__(self, matrix):
        matrix = as_finite_matrix(matrix)
        super().__init__(matrix.shape)
        self._matrix = matrix

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @matrix.setter
    def matrix(self, value):
        value = np.asarray(value, dtype=float)
        if value.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {value.shape}")
        self._matrix = value

    def _matmat(self, X):
        return self._matrix @ X

    def _rmatmat(self, Y):
        return self._matrix.T @ Y

    def to_dense(self):
        return np.array(self._matrix)


class SparseOperator(LinearOperator):
    """Operator backed by a CSR matrix with a fixed sparsity pattern.

    The transpose is kept as a second CSR so both actions run row-wise.
    :meth:`set_values` replaces the stored values without changing the
    pattern; values are given in the row-major order of ``pattern_rows`` /
    ``pattern_cols``.
    """

    def __init__(self, matrix):
        csr = sp.csr_matrix(matrix, dtype=float)
        csr.sum_duplicates()
        csr.sort_indices()
        super().__init__(csr.shape)
        self._csr = csr
        coo = csr.tocoo()
        self.pattern_rows = coo.row.astype(np.int64)
        self.pattern_cols = coo.col.astype(np.int64)
        # position of each csr entry inside the transposed csr's data array
        order = np.lexsort((self.pattern_rows, self.pattern_cols))
        self._t_order = order
        self._csr_t = sp.csr_matrix(
            (csr.data[order], self.pattern_rows[order],
             np.searchsorted(self.pattern_cols[order], np.arange(self.shape[1] + 1))),
            shape=(self.shape[1], self.shape[0]),
        )

    @classmethod
    def from_triplets(cls, rows, cols, values, shape) -> "SparseOperator":
        return cls(sparse_from_triplets(rows, cols, values, shape))

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._csr

    def set_values(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.nnz,):
            raise ValueError(f"expected {self.nnz} values, got shape {values.shape}")
        self._csr.data[:] = values
        self._csr_t.data[:] = values[self._t_order]

    def _matmat(self, X):
        return np.asarray(self._csr @ X)

    def _rmatmat(self, Y):
        return np.asarray(self._csr_t @ Y)

    def to_dense(self):
        return self._csr.toarray()


class AugmentedOperator(LinearOperator):
    """Symmetric (m+n) x (m+n) operator [[0, W], [W^T, 0]] built on ``inner``.

    The zero blocks are never formed: applying to (x; y) returns (W y; W^T x).
    Each augmented single-vector application advances ``inner.counter`` by
    one. A half that is exactly zero is skipped, which is what keeps a
    Golub-Kahan style start (u; 0) at one product with W per step.
    """

    def __init__(self, inner: LinearOperator):
        m, n = inner.shape
        super().__init__((m + n, m + n))
        self.inner = inner
        self.m, self.n = m, n

    def _matmat(self, Z):
        m = self.m
        top, bottom = Z[:m], Z[m:]
        width = Z.shape[1]
        self.inner.counter += width
        out = np.zeros_like(Z)
        if np.any(bottom):
            out[:m] = self.inner._matmat(bottom)
        if np.any(top):
            out[m:] = self.inner._rmatmat(top)
        return out

    _rmatmat = _matmat

    def to_dense(self):
        W = self.inner.to_dense()
        m, n = W.shape
        out = np.zeros((m + n, m + n))
        out[:m, m:] = W
        out[m:, :m] = W.T
        return out


def augment(W: LinearOperator) -> AugmentedOperator:
    return AugmentedOperator(W)


def aslinearoperator(A) -> LinearOperator:
    if isinstance(A, LinearOperator):
        return A
    if sp.issparse(A):
        return SparseOperator(A)
    return DenseOperator(A)


# ----------------------------------------------------------------------------
# Small dense factorizations
# ----------------------------------------------------------------------------


def thin_qr(M, scale: float | None = None):
    """Householder thin QR with a nonnegative diagonal in R.

    Returns ``(Q, R, rank)`` where ``rank`` counts diagonal entries of R above
    ``1e-12 * scale``. ``scale`` defaults to ``||M||_F``; callers that need an
    absolute notion of "numerically zero" (e.g. a Lanczos residual that should
    vanish relative to the operator) pass their own reference norm.
    """
    M = as_finite_matrix(M)
    m, b = M.shape
    if m < b:
        raise ValueError(f"thin_qr needs rows >= cols, got {M.shape}")
    Q, R = np.linalg.qr(M, mode="reduced")
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q *= signs
    R *= signs[:, None]
    if scale is None:
        scale = np.linalg.norm(M)
    rank = int(np.count_nonzero(np.diag(R) > QR_RANK_TOL * scale))
    return Q, R, rank


def sym_evd_small(T, limit: int = SMALL_DENSE_LIMIT):
    """Eigen-decomposition of a small symmetric matrix, eigenvalues descending."""
    T = as_finite_matrix(T, "T")
    d = T.shape[0]
    if T.shape != (d, d):
        raise ValueError("T must be square")
    if d > limit:
        raise ValueError(f"matrix of size {d} exceeds small-dense limit {limit}")
    lam, V = np.linalg.eigh(0.5 * (T + T.T))
    return V[:, ::-1], lam[::-1]


def full_svd_small(M, limit: int = SMALL_DENSE_LIMIT):
    """Thin SVD ``M = U diag(S) V^T`` with S descending."""
    M = as_finite_matrix(M)
    if min(M.shape) > limit:
        raise ValueError(f"min dimension {min(M.shape)} exceeds small-dense limit {limit}")
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    return U, S, Vt.T


# ----------------------------------------------------------------------------
# Matrix Market I/O
# ----------------------------------------------------------------------------


def write_mtx(path: str | os.PathLike, M) -> None:
    """Write a dense array ("array" format) or sparse matrix ("coordinate")."""
    if sp.issparse(M):
        scipy.io.mmwrite(str(path), sp.coo_matrix(M), field="real")
    else:
        scipy.io.mmwrite(str(path), as_finite_matrix(M), field="real")


def read_mtx(path: str | os.PathLike):
    """Read a Matrix Market file; coordinate files come back as CSR."""
    M = scipy.io.mmread(str(path))
    if sp.issparse(M):
        return sp.csr_matrix(M, dtype=float)
    return np.asarray(M, dtype=float)
