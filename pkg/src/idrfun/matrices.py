"""Test matrix generators, Matrix Market coordinate files, and seeded vectors."""
from __future__ import annotations

import numpy as np

from .linalg import InvalidInputError, SparseMatrix


class ParseError(ValueError):
    """A Matrix Market file violated the coordinate format.

    Carries the one-based line number of the offending line (0 when the file
    could not be read at all).
    """

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def gen_grcar(n: int, k: int = 3) -> SparseMatrix:
    """Grcar matrix: -1 on the subdiagonal, 1 on the diagonal and the first
    k superdiagonals.  Nonsymmetric, Toeplitz, one-norm at most k + 2."""
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    if n < k + 2:
        raise InvalidInputError(f"order must be at least k + 2 = {k + 2}")
    rows = []
    cols = []
    vals = []
    for i in range(n):
        if i > 0:
            rows.append(i)
            cols.append(i - 1)
            vals.append(-1.0)
        for j in range(i, min(i + k + 1, n)):
            rows.append(i)
            cols.append(j)
            vals.append(1.0)
    return SparseMatrix.from_coo(n, n, rows, cols, vals)


def gen_laplacian1d(n: int) -> SparseMatrix:
    """Symmetric positive definite tridiagonal matrix tridiag(-1, 2, -1)."""
    if n < 2:
        raise InvalidInputError("order must be at least 2")
    rows = []
    cols = []
    vals = []
    for i in range(n):
        if i > 0:
            rows.append(i)
            cols.append(i - 1)
            vals.append(-1.0)
        rows.append(i)
        cols.append(i)
        vals.append(2.0)
        if i < n - 1:
            rows.append(i)
            cols.append(i + 1)
            vals.append(-1.0)
    return SparseMatrix.from_coo(n, n, rows, cols, vals)


def random_unit_vector(n: int, seed: int) -> np.ndarray:
    """Unit two-norm vector with standard normal direction.

    Drawn from a counter-based Philox generator so the same seed gives the
    same vector on every platform.
    """
    if n < 1:
        raise InvalidInputError("length must be at least 1")
    rng = np.random.Generator(np.random.Philox(seed))
    x = rng.standard_normal(n)
    return x / np.linalg.norm(x)


def load_matrix_market(path) -> SparseMatrix:
    """Read a Matrix Market coordinate file with real general or real
    symmetric storage.

    Symmetric storage is expanded to full storage; duplicates are summed and
    explicit zeros pruned by the CSR constructor.  Any deviation from the
    format raises :class:`ParseError` with the offending line number.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ParseError("empty file", 1)
    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        raise ParseError("malformed header banner", 1)
    obj, fmt, fieldtype, symmetry = (tok.lower() for tok in banner[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}", 1)
    if fmt != "coordinate":
        raise ParseError(f"unsupported format {fmt!r}; only coordinate", 1)
    if fieldtype != "real":
        raise ParseError(f"unsupported field {fieldtype!r}; only real", 1)
    if symmetry not in ("general", "symmetric"):
        raise ParseError(f"unsupported symmetry {symmetry!r}", 1)

    size_seen = False
    n_rows = n_cols = nnz_declared = 0
    entries_read = 0
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if not size_seen:
            if len(parts) != 3:
                raise ParseError("size line must hold three integers", lineno)
            try:
                n_rows, n_cols, nnz_declared = (int(p) for p in parts)
            except ValueError as exc:
                raise ParseError(f"bad size line: {exc}", lineno) from exc
            if n_rows < 0 or n_cols < 0 or nnz_declared < 0:
                raise ParseError("size line entries must be nonnegative", lineno)
            if symmetry == "symmetric" and n_rows != n_cols:
                raise ParseError("symmetric matrix must be square", lineno)
            size_seen = True
            continue
        if entries_read >= nnz_declared:
            raise ParseError("more entries than declared", lineno)
        if len(parts) != 3:
            raise ParseError("entry line must hold row, column, value", lineno)
        try:
            r = int(parts[0])
            c = int(parts[1])
            val = float(parts[2])
        except ValueError as exc:
            raise ParseError(f"bad entry: {exc}", lineno) from exc
        if not 1 <= r <= n_rows:
            raise ParseError(f"row index {r} out of range [1, {n_rows}]", lineno)
        if not 1 <= c <= n_cols:
            raise ParseError(f"column index {c} out of range [1, {n_cols}]", lineno)
        if not np.isfinite(val):
            raise ParseError("entry value must be finite", lineno)
        entries_read += 1
        rows.append(r - 1)
        cols.append(c - 1)
        vals.append(val)
        if symmetry == "symmetric" and r != c:
            rows.append(c - 1)
            cols.append(r - 1)
            vals.append(val)

    if not size_seen:
        raise ParseError("missing size line", len(lines))
    if entries_read != nnz_declared:
        raise ParseError(
            f"declared {nnz_declared} entries, found {entries_read}", len(lines)
        )
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def save_matrix_market(path, matrix: SparseMatrix) -> None:
    """Write a matrix as Matrix Market coordinate real general, one-based
    indices, values in shortest round-trip form."""
    dense_rows = matrix._entry_rows
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{matrix.n_rows} {matrix.n_cols} {matrix.nnz}\n")
        for r, c, val in zip(dense_rows, matrix.col_indices, matrix.values):
            fh.write(f"{r + 1} {c + 1} {val:.17g}\n")
