import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ref15_matrix
from supchol.errors import DimensionError, ParseError, UnsupportedFormat, ValidationError
from supchol.matrix import (
    Permutation,
    SymmetricSparseMatrix,
    permute_symmetric,
    read_matrix_market,
    write_matrix_market,
)


def mm(text):
    return read_matrix_market(io.StringIO(text))


def lower_entries(A):
    return {(int(i), int(j)): float(v) for i, j, v in zip(A.rowidx, A.col_of_entry, A.values)}


def test_read_real_symmetric_inserts_missing_diagonal():
    A = mm("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 1\n")
    assert A.n == 2
    assert lower_entries(A) == {(0, 0): 4.0, (1, 0): 1.0, (1, 1): 0.0}
    A.validate()


def test_read_general_is_unsupported():
    with pytest.raises(UnsupportedFormat):
        mm("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n")


def test_upper_entry_is_mirrored():
    A = mm("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 5\n")
    assert lower_entries(A)[(1, 0)] == 5.0


def test_duplicates_summed_and_comments_kept():
    A = mm("%%MatrixMarket matrix coordinate real symmetric\n% hello\n2 2 3\n2 1 1\n1 2 2\n2 2 3\n")
    assert lower_entries(A)[(1, 0)] == 3.0
    assert A.comments == ("% hello",)


@pytest.mark.parametrize(
    "text",
    [
        "not a header\n1 1 1\n1 1 1\n",
        "%%MatrixMarket matrix coordinate real symmetric\nx y z\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1\n",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        mm(text)


def test_array_format_unsupported():
    with pytest.raises(UnsupportedFormat):
        mm("%%MatrixMarket matrix array real symmetric\n1 1\n1\n")


def test_pattern_fill_rule():
    A = mm("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 1\n")
    e = lower_entries(A)
    assert e[(0, 0)] == 3.0 and e[(1, 1)] == 2.0 and e[(2, 2)] == 2.0
    assert e[(1, 0)] == 1.0 and e[(2, 0)] == 1.0
    np.linalg.cholesky(A.to_dense())


def test_write_one_by_one():
    buf = io.StringIO()
    write_matrix_market(SymmetricSparseMatrix.from_dense([[4.0]]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[1] == "1 1 1" and lines[2] == "1 1 4"


def test_round_trip_ref15_unit_values():
    A = ref15_matrix(1.0, 1.0)
    buf = io.StringIO()
    write_matrix_market(A, buf)
    B = read_matrix_market(io.StringIO(buf.getvalue()))
    assert B.equal(A)


def test_diagonal_matrix_nnz_is_n():
    A = SymmetricSparseMatrix.from_dense(np.diag([1.0, 2.0, 3.0]))
    assert A.nnz == 3


@st.composite
def sym_matrices(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    mask = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    vals = draw(
        st.lists(st.floats(-1e3, 1e3, allow_nan=False, width=64), min_size=n * n, max_size=n * n)
    )
    d = np.where(np.array(mask).reshape(n, n), np.array(vals).reshape(n, n), 0.0)
    d = np.tril(d)
    return SymmetricSparseMatrix.from_dense(d + np.tril(d, -1).T)


@given(sym_matrices())
@settings(max_examples=60, deadline=None)
def test_round_trip_property(A):
    buf = io.StringIO()
    write_matrix_market(A, buf)
    assert read_matrix_market(io.StringIO(buf.getvalue())).equal(A)


@given(sym_matrices())
@settings(max_examples=60, deadline=None)
def test_storage_invariants(A):
    A.validate()
    assert A.colptr[0] == 0 and A.colptr[-1] == A.nnz


def test_permute_identity_unchanged():
    A = ref15_matrix()
    assert permute_symmetric(A, Permutation.identity(15)).equal(A)


def test_permute_swap_by_hand():
    A = SymmetricSparseMatrix.from_dense([[4.0, 1.0], [1.0, 5.0]])
    B = permute_symmetric(A, Permutation([1, 0]))
    assert lower_entries(B) == {(0, 0): 5.0, (1, 0): 1.0, (1, 1): 4.0}


def test_permute_length_mismatch():
    with pytest.raises(DimensionError):
        permute_symmetric(ref15_matrix(), Permutation.identity(3))


def test_permute_against_dense_oracle():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((8, 8))
    D = M @ M.T + 8 * np.eye(8)
    p = Permutation(rng.permutation(8))
    P = np.zeros((8, 8))
    P[p.perm, np.arange(8)] = 1.0  # P e_i = e_{perm(i)}
    oracle = P @ D @ P.T
    got = permute_symmetric(SymmetricSparseMatrix.from_dense(D), p).to_dense()
    assert np.array_equal(got, oracle)


def _compose_check(A, p, q):
    left = permute_symmetric(A, p.compose(q))
    right = permute_symmetric(permute_symmetric(A, q), p)
    assert left.equal(right)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_permute_composition_exhaustive(n):
    rng = np.random.default_rng(n)
    D = rng.standard_normal((n, n))
    A = SymmetricSparseMatrix.from_dense(D + D.T)
    perms = [Permutation(p) for p in itertools.permutations(range(n))]
    for p in perms:
        for q in perms:
            _compose_check(A, p, q)


@given(sym_matrices(), st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_permute_composition_property(A, rnd):
    p = list(range(A.n))
    q = list(range(A.n))
    rnd.shuffle(p)
    rnd.shuffle(q)
    _compose_check(A, Permutation(p), Permutation(q))


def test_permutation_inverse_round_trip():
    p = Permutation([2, 0, 3, 1])
    assert p.compose(p.inverted()).is_identity()
    assert Permutation.from_order(p.order) == p


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValidationError):
        Permutation([0, 0, 1])
