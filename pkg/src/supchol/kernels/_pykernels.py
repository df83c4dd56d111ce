"""NumPy/SciPy implementation of the dense kernels, used when the compiled
core is unavailable. Same contracts as the compiled module."""

from functools import lru_cache

import numpy as np
from scipy.linalg import blas, lapack

from ..errors import NotPositiveDefinite

NAME = "python"


def potrf(a):
    if a.shape[0] == 0:
        return
    c, info = lapack.dpotrf(a, lower=1, clean=0)
    if info > 0:
        raise NotPositiveDefinite(int(info))
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    a[...] = c


def trsm(diag, rect):
    if rect.size == 0:
        return
    rect[...] = blas.dtrsm(1.0, diag, rect, side=1, lower=1, trans_a=1, diag=0)


def syrk(target, source):
    if source.size == 0:
        return
    target -= np.tril(source @ source.T)


def gemm(target, left, right):
    if left.size == 0 or right.size == 0:
        return
    target -= left @ right.T


@lru_cache(maxsize=256)
def _packed_index(t):
    cols, rows = np.triu_indices(t)
    return rows, cols


def syrk_packed(buf, source):
    t = source.shape[0]
    if t == 0 or source.shape[1] == 0:
        return
    rows, cols = _packed_index(t)
    buf -= (source @ source.T)[rows, cols]


def assemble_packed(panel, buf, t, k0, k1, pos, cols):
    count = 0
    off = k0 * t - k0 * (k0 - 1) // 2
    for k in range(k0, k1):
        ln = t - k
        panel[pos[k - k0 :], cols[k - k0]] += buf[off : off + ln]
        off += ln
        count += ln
    return count


def add_block(target, buf, lower):
    if lower:
        target += np.tril(buf)
    else:
        target += buf
