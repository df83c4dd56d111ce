import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supchol.errors import DimensionError, NotPositiveDefinite, SingularBlock
from supchol.kernels import (
    HostBackend,
    available_implementations,
    get_implementation,
    new_panel,
)

IMPLS = available_implementations()


@pytest.fixture(params=IMPLS)
def be(request):
    return HostBackend(get_implementation(request.param))


def F(a):
    return np.asfortranarray(np.array(a, dtype=np.float64, ndmin=2))


def naive_product(a, b):
    m, k = a.shape
    n = b.shape[0]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for p in range(k):
                s += a[i, p] * b[j, p]
            out[i, j] = s
    return out


def test_compiled_core_is_built():
    assert "compiled" in IMPLS


def test_panel_layout_is_column_major():
    p = new_panel(3, 2)
    p[1, 1] = 7.0
    assert p.flags.f_contiguous and p.ravel(order="K")[1 + 1 * 3] == 7.0


def test_potrf_scalar(be):
    a = F([[4.0]])
    be.potrf(a)
    assert a[0, 0] == 2.0


def test_potrf_two_by_two(be):
    a = F([[4.0, 0.0], [2.0, 5.0]])
    be.potrf(a)
    assert np.tril(a).tolist() == [[2.0, 0.0], [1.0, 2.0]]


def test_potrf_failure_column(be):
    with pytest.raises(NotPositiveDefinite) as exc:
        be.potrf(F([[1.0, 0.0], [2.0, 1.0]]))
    assert exc.value.column == 2


def test_trsm_examples(be):
    r = F([[4.0]])
    be.trsm(F([[2.0]]), r)
    assert r.tolist() == [[2.0]]
    r = F([[4.0, 2.0]])
    be.trsm(F([[2.0, 0.0], [1.0, 2.0]]), r)
    assert r.tolist() == [[2.0, 0.0]]
    r = F([[3.0, -1.0], [5.0, 7.0]])
    be.trsm(F(np.eye(2)), r)
    assert r.tolist() == [[3.0, -1.0], [5.0, 7.0]]


def test_trsm_singular(be):
    with pytest.raises(SingularBlock):
        be.trsm(F([[0.0]]), F([[1.0]]))


def test_syrk_examples(be):
    t = F([[5.0]])
    be.syrk(t, F([[1.0, 2.0]]))
    assert t.tolist() == [[0.0]]
    t = F([[1.0, 9.0], [2.0, 3.0]])
    be.syrk(t, F(np.zeros((2, 3))))
    assert t.tolist() == [[1.0, 9.0], [2.0, 3.0]]


def test_syrk_only_touches_lower(be):
    t = F(np.zeros((3, 3)))
    be.syrk(t, F(np.ones((3, 2))))
    assert np.all(np.triu(t, 1) == 0.0)


def test_gemm_examples(be):
    t = F([[10.0]])
    be.gemm(t, F([[1.0, 2.0]]), F([[3.0, 4.0]]))
    assert t.tolist() == [[-1.0]]
    t = F([[1.0, 2.0]])
    be.gemm(t, F([[0.0, 0.0]]), F([[1.0, 1.0], [2.0, 2.0]]))
    assert t.tolist() == [[1.0, 2.0]]


def test_dimension_errors(be):
    with pytest.raises(DimensionError):
        be.syrk(F(np.zeros((2, 2))), F(np.zeros((3, 1))))
    with pytest.raises(DimensionError):
        be.gemm(F(np.zeros((2, 2))), F(np.zeros((2, 1))), F(np.zeros((2, 2))))
    with pytest.raises(DimensionError):
        be.potrf(F(np.zeros((2, 3))))


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_update_kernels_match_triple_loop(m, n, k, seed):
    rng = np.random.default_rng(seed)
    left, right = rng.standard_normal((m, k)), rng.standard_normal((n, k))
    t0 = rng.standard_normal((m, n))
    s0 = rng.standard_normal((m, m))
    for impl in IMPLS:
        be = HostBackend(get_implementation(impl))
        t = F(t0)
        be.gemm(t, F(left), F(right))
        ref = t0 - naive_product(left, right)
        assert np.allclose(t, ref, rtol=1e-15, atol=1e-15 * np.abs(ref).max())
        s = F(s0)
        be.syrk(s, F(left))
        ref = np.tril(s0 - naive_product(left, left))
        assert np.allclose(np.tril(s), ref, rtol=1e-15, atol=1e-15 * np.abs(ref).max())


@given(st.integers(1, 64), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_potrf_reconstructs(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    D = M @ M.T + n * np.eye(n)
    for impl in IMPLS:
        a = F(D)
        HostBackend(get_implementation(impl)).potrf(a)
        L = np.tril(a)
        assert np.linalg.norm(L @ L.T - D) / np.linalg.norm(D) <= 1e-13


def test_kernels_work_on_strided_subpanels(be):
    rng = np.random.default_rng(0)
    big = new_panel(7, 5)
    big[...] = rng.standard_normal((7, 5))
    src = big[2:6, 1:3]
    tgt = new_panel(6, 6)
    ref = tgt[1:5, 1:5].copy() - np.tril(src @ src.T)
    be.syrk(tgt[1:5, 1:5], src)
    assert np.allclose(np.tril(tgt[1:5, 1:5]), np.tril(ref))


def test_implementations_bit_identical():
    if len(IMPLS) < 2:
        pytest.skip("only one implementation available")
    rng = np.random.default_rng(1)
    M = rng.standard_normal((6, 6))
    D = M @ M.T + 6 * np.eye(6)
    outs = []
    for impl in IMPLS:
        a = F(D)
        HostBackend(get_implementation(impl)).potrf(a)
        outs.append(np.tril(a))
    assert np.allclose(outs[0], outs[1], rtol=1e-14)


def test_unknown_implementation():
    with pytest.raises(ValueError):
        get_implementation("fortran")


def test_call_trace_records_tags(be):
    be2 = HostBackend(be.impl, trace=True)
    be2.gemm(F([[1.0]]), F([[1.0]]), F([[1.0]]), tag=(0, 2))
    assert be2.trace == [("gemm", (0, 2))] and be2.calls["gemm"] == 1
