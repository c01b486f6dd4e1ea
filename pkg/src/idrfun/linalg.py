"""Shared linear algebra kernels: CSR sparse matrices, pivoted small solves,
and orthogonalization with reorthogonalization.
"""
from __future__ import annotations

import numpy as np


class InvalidInputError(ValueError):
    """Raised when arguments violate a documented precondition."""


class SingularSystemError(RuntimeError):
    """Raised when a small dense solve meets a pivot below the scaled threshold."""


# Relative pivot threshold for small dense solves.
PIVOT_RTOL = 1e-14


class SparseMatrix:
    """Sparse matrix in compressed sparse row (CSR) form.

    Canonical storage: within each row the column indices are strictly
    increasing, duplicates have been summed, and explicit zeros are pruned.
    Use :meth:`from_coo` or :meth:`from_dense` to build one from raw data;
    the constructor validates but does not canonicalize.
    """

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.asarray(row_offsets, dtype=np.int64)
        self.col_indices = np.asarray(col_indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self._validate()
        # Row index of every stored entry, precomputed for matvec.
        self._entry_rows = np.repeat(
            np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_offsets)
        )

    def _validate(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise InvalidInputError("matrix dimensions must be nonnegative")
        if self.row_offsets.shape != (self.n_rows + 1,):
            raise InvalidInputError("row_offsets must have length n_rows + 1")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != self.values.shape[0]:
            raise InvalidInputError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(self.row_offsets) < 0):
            raise InvalidInputError("row_offsets must be nondecreasing")
        if self.col_indices.shape != self.values.shape or self.col_indices.ndim != 1:
            raise InvalidInputError("col_indices and values must be 1d of equal length")
        if self.values.size and (
            self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols
        ):
            raise InvalidInputError("column index out of range")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("matrix values must be finite")
        if np.any(self.values == 0.0):
            raise InvalidInputError("explicit zeros are not stored; prune them first")
        for r in range(self.n_rows):
            lo, hi = self.row_offsets[r], self.row_offsets[r + 1]
            if hi - lo > 1 and np.any(np.diff(self.col_indices[lo:hi]) <= 0):
                raise InvalidInputError(
                    f"column indices in row {r} must be strictly increasing"
                )

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def is_square(self) -> bool:
        return self.n_rows == self.n_cols

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals) -> "SparseMatrix":
        """Build from coordinate triplets; sums duplicates and prunes zeros."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise InvalidInputError("rows, cols, vals must be 1d of equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise InvalidInputError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise InvalidInputError("column index out of range")
        # Collapse duplicates by a combined (row, col) key, then prune zeros.
        key = rows * np.int64(n_cols) + cols
        ukey, inverse = np.unique(key, return_inverse=True)
        summed = np.bincount(inverse, weights=vals, minlength=ukey.size)
        keep = summed != 0.0
        ukey = ukey[keep]
        summed = summed[keep]
        urows, ucols = np.divmod(ukey, np.int64(n_cols))
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(urows, minlength=n_rows), out=offsets[1:])
        return cls(n_rows, n_cols, offsets, ucols, summed)

    @classmethod
    def from_dense(cls, arr) -> "SparseMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidInputError("expected a 2d array")
        rows, cols = np.nonzero(arr)
        return cls.from_coo(arr.shape[0], arr.shape[1], rows, cols, arr[rows, cols])

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        out[self._entry_rows, self.col_indices] = self.values
        return out

    def frob_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2)))

    def one_norm(self) -> float:
        """Maximum absolute column sum."""
        if self.nnz == 0:
            return 0.0
        colsums = np.bincount(
            self.col_indices, weights=np.abs(self.values), minlength=self.n_cols
        )
        return float(colsums.max())

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_coo(
            self.n_cols, self.n_rows, self.col_indices, self._entry_rows, self.values
        )

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def spmv(matrix: SparseMatrix, x) -> np.ndarray:
    """Sparse matrix-vector product ``matrix @ x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (matrix.n_cols,):
        raise InvalidInputError(
            f"vector length {x.shape} does not match {matrix.n_cols} columns"
        )
    prods = matrix.values * x[matrix.col_indices]
    return np.bincount(matrix._entry_rows, weights=prods, minlength=matrix.n_rows)


def plu_factor(matrix):
    """LU factorization with partial pivoting, returning (lu, perm, min_pivot).

    ``lu`` packs the unit lower and upper triangles, ``perm`` is the row
    permutation applied, and ``min_pivot`` is the smallest absolute pivot
    met during elimination (for singularity tests by the caller).
    """
    lu = np.array(matrix, dtype=np.float64, copy=True)
    if lu.ndim != 2 or lu.shape[0] != lu.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if not np.all(np.isfinite(lu)):
        raise InvalidInputError("matrix entries must be finite")
    n = lu.shape[0]
    perm = np.arange(n)
    min_pivot = np.inf
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        pivot = lu[k, k]
        min_pivot = min(min_pivot, abs(pivot))
        if pivot != 0.0:
            lu[k + 1 :, k] /= pivot
            lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, perm, float(min_pivot)


def plu_solve(lu, perm, rhs) -> np.ndarray:
    """Solve with a factorization from :func:`plu_factor`; rhs may be 1d or 2d."""
    rhs = np.asarray(rhs, dtype=np.float64)
    vector = rhs.ndim == 1
    x = rhs[perm].reshape(lu.shape[0], -1).copy()
    n = lu.shape[0]
    for k in range(1, n):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        x[k] -= lu[k, k + 1 :] @ x[k + 1 :]
        x[k] /= lu[k, k]
    return x[:, 0] if vector else x


def solve_small(matrix, rhs) -> np.ndarray:
    """Solve a small dense square system by partially pivoted LU.

    Raises SingularSystemError when the smallest pivot falls at or below
    ``PIVOT_RTOL`` times the Frobenius norm of the matrix.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if rhs.shape[0] != matrix.shape[0]:
        raise InvalidInputError("right-hand side length does not match")
    lu, perm, min_pivot = plu_factor(matrix)
    fro = float(np.sqrt(np.sum(matrix**2)))
    if min_pivot <= PIVOT_RTOL * fro:
        raise SingularSystemError(
            f"pivot {min_pivot:.3e} below threshold {PIVOT_RTOL * fro:.3e}"
        )
    return plu_solve(lu, perm, rhs)


def orthogonalize_against(w, basis):
    """Orthogonalize ``w`` against the orthonormal columns of ``basis``.

    Modified Gram-Schmidt with one unconditional reorthogonalization pass.
    Returns ``(coeffs, norm, unit)`` where ``coeffs`` accumulates both passes,
    ``norm`` is the remainder norm and ``unit`` is the normalized remainder,
    or None when the remainder is negligible relative to the input norm
    (the caller treats that as a breakdown signal).
    """
    w = np.asarray(w, dtype=np.float64)
    basis = np.asarray(basis, dtype=np.float64)
    if basis.ndim != 2 or basis.shape[0] != w.shape[0]:
        raise InvalidInputError("basis must be 2d with rows matching w")
    norm_in = float(np.linalg.norm(w))
    k = basis.shape[1]
    coeffs = np.zeros(k)
    v = w.copy()
    for _ in range(2):
        for j in range(k):
            c = float(basis[:, j] @ v)
            coeffs[j] += c
            v -= c * basis[:, j]
    norm = float(np.linalg.norm(v))
    if norm <= 1e-14 * norm_in:
        return coeffs, norm, None
    return coeffs, norm, v / norm
