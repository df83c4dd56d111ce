"""Symmetric sparse matrices in lower-triangle CSC form, Matrix Market I/O
and symmetric permutation."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, ParseError, UnsupportedFormat, ValidationError

__all__ = [
    "SymmetricSparseMatrix",
    "Permutation",
    "read_matrix_market",
    "write_matrix_market",
    "permute_symmetric",
]


@dataclass(frozen=True, eq=False)
class SymmetricSparseMatrix:
    """Lower triangle of a symmetric ``n x n`` matrix in compressed sparse column form.

    Every column stores its diagonal first, followed by strictly increasing
    row indices. The represented matrix is ``lower + lower.T - diag``.
    """

    n: int
    colptr: np.ndarray
    rowidx: np.ndarray
    values: np.ndarray
    comments: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "colptr", np.ascontiguousarray(self.colptr, dtype=np.int64))
        object.__setattr__(self, "rowidx", np.ascontiguousarray(self.rowidx, dtype=np.int64))
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        for a in (self.colptr, self.rowidx, self.values):
            a.setflags(write=False)

    @classmethod
    def from_coo(cls, n, rows, cols, values=None, comments=()):
        """Build from coordinate triples (0-based) of either triangle.

        Upper entries are mirrored, duplicates summed and missing diagonals
        inserted as explicit zeros.
        """
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if values is None:
            values = np.ones(rows.shape[0])
        values = np.asarray(values, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise DimensionError("row, column and value arrays differ in length")
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise ValidationError("index out of range")
        lo = np.maximum(rows, cols)
        hi = np.minimum(rows, cols)
        diag = np.arange(n, dtype=np.int64)
        lo = np.concatenate([lo, diag])
        hi = np.concatenate([hi, diag])
        values = np.concatenate([values, np.zeros(n)])
        key = hi * n + lo
        order = np.argsort(key, kind="stable")
        key = key[order]
        values = values[order]
        uniq, start = np.unique(key, return_index=True)
        summed = np.add.reduceat(values, start) if uniq.size else values[:0]
        cidx = uniq // n
        ridx = uniq % n
        colptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(cidx, minlength=n), out=colptr[1:])
        return cls(n, colptr, ridx, summed, tuple(comments))

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise DimensionError("dense matrix must be square")
        r, c = np.nonzero(np.tril(dense))
        return cls.from_coo(dense.shape[0], r, c, dense[r, c])

    @property
    def nnz(self):
        return int(self.colptr[-1])

    def column(self, j):
        lo, hi = self.colptr[j], self.colptr[j + 1]
        return self.rowidx[lo:hi], self.values[lo:hi]

    @cached_property
    def col_of_entry(self):
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.colptr))

    def diagonal(self):
        return self.values[self.colptr[:-1]].copy()

    def to_dense(self):
        d = np.zeros((self.n, self.n))
        c = self.col_of_entry
        d[self.rowidx, c] = self.values
        d[c, self.rowidx] = self.values
        return d

    def to_scipy(self):
        """Full symmetric matrix as ``scipy.sparse.csc_matrix``."""
        import scipy.sparse as sp

        lower = sp.csc_matrix((self.values, self.rowidx, self.colptr), shape=(self.n, self.n))
        return (lower + lower.T - sp.diags(self.diagonal())).tocsc()

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        c = self.col_of_entry
        y = np.bincount(self.rowidx, weights=self.values * x[c], minlength=self.n)
        off = self.rowidx != c
        y += np.bincount(c[off], weights=self.values[off] * x[self.rowidx[off]], minlength=self.n)
        return y

    def norm_inf(self):
        c = self.col_of_entry
        a = np.abs(self.values)
        s = np.bincount(self.rowidx, weights=a, minlength=self.n)
        off = self.rowidx != c
        s += np.bincount(c[off], weights=a[off], minlength=self.n)
        return float(s.max()) if self.n else 0.0

    def norm_fro(self):
        off = self.rowidx != self.col_of_entry
        v = self.values
        return float(np.sqrt(np.sum(v * v) + np.sum(v[off] * v[off])))

    def validate(self):
        """Check the storage invariants; raise ValidationError on the first violation."""
        cp = self.colptr
        if cp.shape != (self.n + 1,) or cp[0] != 0 or np.any(np.diff(cp) < 1):
            raise ValidationError("colptr must start at 0 and give every column a diagonal")
        if cp[-1] != self.rowidx.size or self.values.size != self.rowidx.size:
            raise ValidationError("colptr[n] does not match stored entries")
        if not np.array_equal(self.rowidx[cp[:-1]], np.arange(self.n)):
            raise ValidationError("each column must store its diagonal first")
        d = np.diff(self.rowidx)
        inside = np.ones(d.size, dtype=bool)
        inside[cp[1:-1] - 1] = False
        if np.any(d[inside] <= 0):
            raise ValidationError("row indices must increase strictly within a column")
        return self

    def pattern_equal(self, other):
        return (
            self.n == other.n
            and np.array_equal(self.colptr, other.colptr)
            and np.array_equal(self.rowidx, other.rowidx)
        )

    def equal(self, other):
        return self.pattern_equal(other) and np.array_equal(self.values, other.values)


class Permutation:
    """Bijection ``old -> new`` on ``0..n-1``.

    ``perm[i]`` is the new position of old index ``i``; ``inverse[k]`` is the
    old index placed at position ``k`` (the elimination order).
    """

    __slots__ = ("perm", "_inverse")

    def __init__(self, perm):
        perm = np.asarray(perm, dtype=np.int64).ravel()
        n = perm.size
        if n and (perm.min() < 0 or perm.max() >= n or np.unique(perm).size != n):
            raise ValidationError("permutation is not a bijection on 0..n-1")
        perm.setflags(write=False)
        self.perm = perm
        self._inverse = None

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n))

    @classmethod
    def from_order(cls, order):
        """Build from an elimination order: ``order[k]`` is the old index placed k-th."""
        order = np.asarray(order, dtype=np.int64).ravel()
        perm = np.empty_like(order)
        perm[order] = np.arange(order.size)
        if order.size and (order.min() < 0 or order.max() >= order.size or np.unique(order).size != order.size):
            raise ValidationError("order is not a bijection on 0..n-1")
        return cls(perm)

    @property
    def n(self):
        return self.perm.size

    @property
    def inverse(self):
        if self._inverse is None:
            inv = np.empty_like(self.perm)
            inv[self.perm] = np.arange(self.perm.size)
            inv.setflags(write=False)
            self._inverse = inv
        return self._inverse

    @property
    def order(self):
        return self.inverse

    def inverted(self):
        return Permutation(self.inverse)

    def compose(self, other):
        """``self o other``: apply ``other`` first, then ``self``."""
        if other.n != self.n:
            raise DimensionError("cannot compose permutations of different length")
        return Permutation(self.perm[other.perm])

    def is_identity(self):
        return bool(np.array_equal(self.perm, np.arange(self.n)))

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.perm, other.perm)

    def __repr__(self):
        return f"Permutation({self.perm.tolist()!r})"


def permute_symmetric(A, p):
    """Return ``P A P^T``: entry ``(i, j)`` moves to ``(p(i), p(j))``."""
    if p.n != A.n:
        raise DimensionError(f"permutation has length {p.n}, matrix has n={A.n}")
    r = p.perm[A.rowidx]
    c = p.perm[A.col_of_entry]
    return SymmetricSparseMatrix.from_coo(A.n, r, c, A.values, A.comments)


# -- Matrix Market -------------------------------------------------------------

_BANNER = "%%matrixmarket"


def _as_text(stream):
    if isinstance(stream, (str, bytes)) or hasattr(stream, "__fspath__"):
        raise TypeError("expected a text stream; open the file first")
    return stream


def read_matrix_market(stream):
    """Read a ``coordinate real|pattern symmetric`` Matrix Market stream.

    Pattern files get 1.0 off the diagonal and ``degree + 1`` on it, which
    makes them SPD by strict diagonal dominance.
    """
    stream = _as_text(stream)
    header = stream.readline()
    if not header:
        raise ParseError("empty stream")
    tokens = header.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != _BANNER or tokens[1] != "matrix":
        raise ParseError(f"malformed Matrix Market header: {header.strip()!r}")
    fmt, field_, symm = tokens[2], tokens[3], tokens[4]
    if fmt != "coordinate":
        raise UnsupportedFormat(f"only coordinate format is supported, got {fmt!r}")
    if field_ not in ("real", "pattern"):
        raise UnsupportedFormat(f"unsupported field {field_!r}")
    if symm != "symmetric":
        raise UnsupportedFormat(f"only symmetric matrices are supported, got {symm!r}")

    comments = []
    line = stream.readline()
    while line and (line.startswith("%") or not line.strip()):
        if line.startswith("%"):
            comments.append(line.rstrip("\n"))
        line = stream.readline()
    if not line:
        raise ParseError("missing size line")
    try:
        nr, nc, nnz = (int(t) for t in line.split())
    except ValueError:
        raise ParseError(f"malformed size line: {line.strip()!r}") from None
    if nr != nc:
        raise UnsupportedFormat("symmetric matrices must be square")
    if nr < 0 or nnz < 0:
        raise ParseError("negative size")

    body = [ln for ln in stream.read().splitlines() if ln.strip() and not ln.startswith("%")]
    if len(body) != nnz:
        raise ParseError(f"expected {nnz} entries, found {len(body)}")
    ncol = 2 if field_ == "pattern" else 3
    if nnz:
        try:
            data = np.loadtxt(io.StringIO("\n".join(body)), ndmin=2)
        except ValueError as exc:
            raise ParseError(f"malformed entry: {exc}") from None
        if data.shape[1] != ncol:
            raise ParseError(f"entries must have {ncol} fields")
        ij = data[:, :2]
        if np.any(ij != np.floor(ij)):
            raise ParseError("non-integer index")
        rows = ij[:, 0].astype(np.int64) - 1
        cols = ij[:, 1].astype(np.int64) - 1
        if rows.min() < 0 or cols.min() < 0 or rows.max() >= nr or cols.max() >= nr:
            raise ParseError("index out of range")
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        data = np.zeros((0, ncol))

    if field_ == "real":
        return SymmetricSparseMatrix.from_coo(nr, rows, cols, data[:, 2], comments)

    off = rows != cols
    lo = np.maximum(rows[off], cols[off])
    hi = np.minimum(rows[off], cols[off])
    pairs = np.unique(hi * max(nr, 1) + lo)
    lo, hi = pairs % max(nr, 1), pairs // max(nr, 1)
    degree = np.bincount(lo, minlength=nr) + np.bincount(hi, minlength=nr)
    diag = np.arange(nr)
    return SymmetricSparseMatrix.from_coo(
        nr,
        np.concatenate([lo, diag]),
        np.concatenate([hi, diag]),
        np.concatenate([np.ones(lo.size), degree + 1.0]),
        comments,
    )


def write_matrix_market(A, stream):
    stream = _as_text(stream)
    stream.write("%%MatrixMarket matrix coordinate real symmetric\n")
    stream.write(f"{A.n} {A.n} {A.nnz}\n")
    c = A.col_of_entry
    for i, j, v in zip(A.rowidx.tolist(), c.tolist(), A.values.tolist()):
        stream.write(f"{i + 1} {j + 1} {v:.17g}\n")
