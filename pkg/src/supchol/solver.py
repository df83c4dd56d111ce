"""Triangular solves with a supernodal factor and backward-error evaluation."""

import numpy as np

from .errors import DimensionError, SingularFactor

__all__ = ["forward_solve", "backward_solve", "solve_factored", "residual", "read_vector", "write_vector"]


def _check(factor, partition, v):
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != partition.n:
        raise DimensionError(f"right-hand side has length {v.size}, expected {partition.n}")
    for s in range(partition.nsuper):
        m = int(partition.ncols[s])
        if m and not np.all(np.diagonal(factor[s][:m, :m])):
            j = int(partition.starts[s]) + int(np.flatnonzero(np.diagonal(factor[s][:m, :m]) == 0)[0])
            raise SingularFactor(f"zero diagonal in factor column {j + 1}")
    return v


def forward_solve(factor, partition, b):
    """Solve ``L y = b`` supernode by supernode, left to right."""
    y = _check(factor, partition, b).copy()
    for s in range(partition.nsuper):
        m = int(partition.ncols[s])
        c0 = int(partition.starts[s])
        panel = factor[s]
        diag = np.tril(panel[:m, :m])
        ys = y[c0 : c0 + m]
        for k in range(m):
            ys[k] = (ys[k] - diag[k, :k] @ ys[:k]) / diag[k, k]
        below = partition.rows_below(s)
        if below.size:
            y[below] -= panel[m:, :m] @ ys
    return y


def backward_solve(factor, partition, y):
    """Solve ``L^T x = y`` supernode by supernode, right to left."""
    x = _check(factor, partition, y).copy()
    for s in range(partition.nsuper - 1, -1, -1):
        m = int(partition.ncols[s])
        c0 = int(partition.starts[s])
        panel = factor[s]
        diag = np.tril(panel[:m, :m])
        below = partition.rows_below(s)
        xs = x[c0 : c0 + m]
        if below.size:
            xs -= panel[m:, :m].T @ x[below]
        for k in range(m - 1, -1, -1):
            xs[k] = (xs[k] - diag[k + 1 :, k] @ xs[k + 1 :]) / diag[k, k]
    return x


def solve_factored(factor, partition, b):
    return backward_solve(factor, partition, forward_solve(factor, partition, b))


def residual(A, x, b):
    """``||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)``, denominator floored."""
    x = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if x.size != A.n or b.size != A.n:
        raise DimensionError("residual: vector length does not match the matrix")
    num = float(np.abs(A.matvec(x) - b).max()) if A.n else 0.0
    den = A.norm_inf() * (float(np.abs(x).max()) if x.size else 0.0)
    den += float(np.abs(b).max()) if b.size else 0.0
    return num / max(den, np.finfo(np.float64).tiny)


def read_vector(stream):
    return np.array([float(t) for t in stream.read().split()], dtype=np.float64)


def write_vector(v, stream):
    for val in np.asarray(v).ravel():
        stream.write(f"{val:.17g}\n")
