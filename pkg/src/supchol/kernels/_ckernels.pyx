# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled dense kernels on column-major panels.

Products are always formed into a scratch buffer and then subtracted, so a
kernel applied directly to factor storage and the same kernel applied to a
zeroed buffer that is added afterwards give bit-identical results.
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memset
from scipy.linalg.cython_blas cimport dgemm, dsyrk, dtrsm
from scipy.linalg.cython_lapack cimport dpotrf

import numpy as np

from supchol.errors import NotPositiveDefinite

NAME = "compiled"


cdef inline int _ld(double[:, :] a) except -1:
    cdef Py_ssize_t ld = a.strides[1] // sizeof(double)
    if a.shape[0] > 1 and a.strides[0] != sizeof(double):
        raise ValueError("panel rows must be contiguous (column-major storage)")
    if ld < a.shape[0]:
        ld = a.shape[0]
    return <int>(ld if ld > 0 else 1)


def potrf(double[:, :] a):
    cdef int n = a.shape[0]
    cdef int lda, info = 0
    cdef char uplo = b'L'
    if n == 0:
        return
    lda = _ld(a)
    dpotrf(&uplo, &n, &a[0, 0], &lda, &info)
    if info > 0:
        raise NotPositiveDefinite(info)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")


def trsm(double[:, :] diag, double[:, :] rect):
    cdef int m = rect.shape[0]
    cdef int n = rect.shape[1]
    cdef int lda, ldb
    cdef double one = 1.0
    cdef char side = b'R'
    cdef char uplo = b'L'
    cdef char trans = b'T'
    cdef char unit = b'N'
    if m == 0 or n == 0:
        return
    lda = _ld(diag)
    ldb = _ld(rect)
    dtrsm(&side, &uplo, &trans, &unit, &m, &n, &one, &diag[0, 0], &lda, &rect[0, 0], &ldb)


cdef double* _gram(double[:, :] src) except NULL:
    """Lower triangle of src @ src.T in a fresh n x n column-major buffer."""
    cdef int n = src.shape[0]
    cdef int k = src.shape[1]
    cdef int lda = _ld(src)
    cdef double one = 1.0, zero = 0.0
    cdef char uplo = b'L'
    cdef char trans = b'N'
    cdef double* w = <double*> malloc(<size_t>n * n * sizeof(double))
    if w == NULL:
        raise MemoryError()
    dsyrk(&uplo, &trans, &n, &k, &one, &src[0, 0], &lda, &zero, w, &n)
    return w


def syrk(double[:, :] target, double[:, :] source):
    cdef int n = source.shape[0]
    cdef Py_ssize_t i, j
    cdef double* w
    if n == 0 or source.shape[1] == 0:
        return
    w = _gram(source)
    for j in range(n):
        for i in range(j, n):
            target[i, j] -= w[i + j * n]
    free(w)


def gemm(double[:, :] target, double[:, :] left, double[:, :] right):
    cdef int m = left.shape[0]
    cdef int n = right.shape[0]
    cdef int k = left.shape[1]
    cdef int ldl, ldr
    cdef double one = 1.0, zero = 0.0
    cdef char tn = b'N'
    cdef char tt = b'T'
    cdef Py_ssize_t i, j
    cdef double* w
    if m == 0 or n == 0 or k == 0:
        return
    ldl = _ld(left)
    ldr = _ld(right)
    w = <double*> malloc(<size_t>m * n * sizeof(double))
    if w == NULL:
        raise MemoryError()
    dgemm(&tn, &tt, &m, &n, &k, &one, &left[0, 0], &ldl, &right[0, 0], &ldr, &zero, w, &m)
    for j in range(n):
        for i in range(m):
            target[i, j] -= w[i + j * m]
    free(w)


def syrk_packed(double[::1] buf, double[:, :] source):
    """buf -= lower(source @ source.T), packed column by column."""
    cdef int t = source.shape[0]
    cdef Py_ssize_t i, k, off = 0
    cdef double* w
    if t == 0 or source.shape[1] == 0:
        return
    w = _gram(source)
    for k in range(t):
        for i in range(k, t):
            buf[off + i - k] -= w[i + k * t]
        off += t - k
    free(w)


def assemble_packed(double[:, :] panel, double[::1] buf, Py_ssize_t t, Py_ssize_t k0,
                    Py_ssize_t k1, long[::1] pos, long[::1] cols):
    """Add packed update columns k0..k1-1 into ``panel``.

    ``pos[i - k0]`` is the panel row of update row i (i >= k0) and
    ``cols[k - k0]`` the panel column of update column k.
    """
    cdef Py_ssize_t i, k, c, off, count = 0
    for k in range(k0, k1):
        off = k * t - k * (k - 1) // 2
        c = cols[k - k0]
        for i in range(k, t):
            panel[pos[i - k0], c] += buf[off + i - k]
        count += t - k
    return count


def add_block(double[:, :] target, double[:, :] buf, bint lower):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t m = target.shape[0], n = target.shape[1]
    for j in range(n):
        for i in range(j if lower else 0, m):
            target[i, j] += buf[i, j]
