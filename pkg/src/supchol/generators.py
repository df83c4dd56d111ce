"""Test-matrix generators and nested-dissection orderings for grids."""

import numpy as np
import scipy.sparse as sp

from .matrix import Permutation, SymmetricSparseMatrix

__all__ = ["grid_laplacian", "random_spd", "grid_nested_dissection"]


def grid_laplacian(k, dim=2):
    """Standard (2*dim+1)-point Laplacian on a ``k^dim`` grid, Dirichlet boundary."""
    one = sp.diags([-np.ones(k - 1), 2 * np.ones(k), -np.ones(k - 1)], [-1, 0, 1])
    eye = sp.identity(k)
    L = one
    for _ in range(dim - 1):
        L = sp.kron(L, eye) + sp.kron(sp.identity(L.shape[0]), one)
    coo = sp.tril(L).tocoo()
    return SymmetricSparseMatrix.from_coo(L.shape[0], coo.row, coo.col, coo.data)


def random_spd(n, density=0.05, seed=0):
    """Random sparse symmetric matrix made SPD by strict diagonal dominance."""
    rng = np.random.default_rng(seed)
    m = sp.random(n, n, density=density, random_state=rng, format="coo")
    m = sp.tril(m + m.T, k=-1).tocoo()
    vals = rng.uniform(-1.0, 1.0, m.nnz)
    rowsum = np.bincount(m.row, np.abs(vals), n) + np.bincount(m.col, np.abs(vals), n)
    diag = rowsum + rng.uniform(0.5, 1.5, n)
    r = np.concatenate([m.row, np.arange(n)])
    c = np.concatenate([m.col, np.arange(n)])
    v = np.concatenate([vals, diag])
    return SymmetricSparseMatrix.from_coo(n, r, c, v)


def grid_nested_dissection(k, dim=2, leaf=4):
    """Geometric nested-dissection ordering of a ``k^dim`` grid (lexicographic
    numbering, last axis fastest)."""
    order = []

    def rec(box):
        ext = [hi - lo for lo, hi in box]
        if max(ext) <= leaf:
            idx = np.stack(np.meshgrid(*[np.arange(lo, hi) for lo, hi in box], indexing="ij"), -1)
            order.extend(np.ravel_multi_index(idx.reshape(-1, dim).T, (k,) * dim).tolist())
            return
        ax = int(np.argmax(ext))
        lo, hi = box[ax]
        mid = (lo + hi) // 2
        left = list(box)
        left[ax] = (lo, mid)
        right = list(box)
        right[ax] = (mid + 1, hi)
        sep = list(box)
        sep[ax] = (mid, mid + 1)
        rec(left)
        rec(right)
        rec(sep)

    rec([(0, k)] * dim)
    return Permutation.from_order(order)
