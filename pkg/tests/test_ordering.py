import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supchol.errors import DimensionError, ValidationError
from supchol.generators import grid_laplacian
from supchol.matrix import Permutation, SymmetricSparseMatrix, permute_symmetric
from supchol.ordering import minimum_degree, read_permutation, write_permutation
from supchol.symbolic import build_etree, symbolic_factor


def rp(text, n):
    return read_permutation(io.StringIO(text), n)


def test_read_identity():
    assert rp("1 2 3", 3).is_identity()


def test_read_swap():
    assert rp("2\n1\n", 2) == Permutation([1, 0])


def test_read_duplicate_rejected():
    with pytest.raises(ValidationError):
        rp("1 1 2", 3)


def test_read_wrong_count():
    with pytest.raises(DimensionError):
        rp("1 2", 3)


def test_file_lists_elimination_order():
    p = rp("3 1 2", 3)
    assert p.order.tolist() == [2, 0, 1]
    buf = io.StringIO()
    write_permutation(p, buf)
    assert buf.getvalue().split() == ["3", "1", "2"]


def test_md_diagonal_is_identity():
    A = SymmetricSparseMatrix.from_dense(np.diag([1.0, 2.0, 3.0, 4.0]))
    assert minimum_degree(A).is_identity()


def test_md_tridiagonal_order():
    A = grid_laplacian(3, dim=1)
    assert (minimum_degree(A).order + 1).tolist() == [1, 2, 3]


def test_md_star_leaves_first():
    # center 1, leaves 2..5; once three leaves are gone the center and the
    # last leaf tie at degree 1 and the smaller index (the center) goes first
    n = 5
    D = np.eye(n) * 5
    D[0, 1:] = D[1:, 0] = 1.0
    order = (minimum_degree(SymmetricSparseMatrix.from_dense(D)).order + 1).tolist()
    assert order[:3] == [2, 3, 4]
    assert 1 in order[-2:]


def _exhaustive_md(D):
    """Independent greedy simulation on a dense boolean graph."""
    G = (np.abs(D) > 0) & ~np.eye(D.shape[0], dtype=bool)
    alive = list(range(D.shape[0]))
    order = []
    while alive:
        deg = [(int(G[v, alive].sum()), v) for v in alive]
        _, v = min(deg)
        nb = [u for u in alive if G[v, u]]
        for a in nb:
            for b in nb:
                if a != b:
                    G[a, b] = True
        alive.remove(v)
        order.append(v)
    return order


@given(st.integers(2, 12), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_md_matches_dense_simulation(n, seed):
    rng = np.random.default_rng(seed)
    M = (rng.random((n, n)) < 0.3).astype(float)
    D = np.tril(M, -1)
    D = D + D.T + n * np.eye(n)
    p = minimum_degree(SymmetricSparseMatrix.from_dense(D))
    assert p.order.tolist() == _exhaustive_md(D)
    assert sorted(p.perm.tolist()) == list(range(n))


def _fill(A, p):
    B = permute_symmetric(A, p)
    return symbolic_factor(B, build_etree(B)).nnz


@pytest.mark.parametrize("k", range(2, 11))
def test_md_fill_not_worse_than_natural_on_grids(k):
    A = grid_laplacian(k)
    assert _fill(A, minimum_degree(A)) <= _fill(A, Permutation.identity(A.n))
