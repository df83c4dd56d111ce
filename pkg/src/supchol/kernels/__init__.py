"""Dense kernels (potrf, trsm, syrk, gemm) on column-major panels and the
backend interface the factorization drivers call through.

The compiled extension is used when it was built; set
``SUPCHOL_KERNELS=python`` to force the NumPy fallback.
"""

import os

import numpy as np

from ..errors import DimensionError, SingularBlock

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

__all__ = [
    "IMPLEMENTATION",
    "available_implementations",
    "get_implementation",
    "KernelBackend",
    "HostBackend",
    "new_panel",
]


def available_implementations():
    return ["compiled", "python"] if _ckernels is not None else ["python"]


def get_implementation(name=None):
    if name is None:
        name = os.environ.get("SUPCHOL_KERNELS", "auto")
    if name == "auto":
        return _ckernels if _ckernels is not None else _pykernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _ckernels
    raise ValueError(f"unknown kernel implementation {name!r}")


IMPLEMENTATION = get_implementation()


def new_panel(rows, cols):
    """Zeroed column-major panel: element (i, k) at offset i + k * rows."""
    return np.zeros((rows, cols), dtype=np.float64, order="F")


class KernelBackend:
    """Routes dense kernels to an implementation and optionally records calls.

    ``trace`` (when not None) receives ``(op, tag)`` for every update-kernel
    call, where ``tag`` is whatever the caller passed (the drivers pass
    ``(source_supernode, target_supernode)``).
    """

    name = "abstract"

    def __init__(self, impl=None, trace=False):
        self.impl = impl if impl is not None else IMPLEMENTATION
        self.trace = [] if trace else None
        self.calls = {"potrf": 0, "trsm": 0, "syrk": 0, "gemm": 0}

    def _record(self, op, tag):
        self.calls[op] += 1
        if self.trace is not None:
            self.trace.append((op, tag))

    def potrf(self, a, tag=None):
        if a.shape[0] != a.shape[1]:
            raise DimensionError("potrf needs a square block")
        self._record("potrf", tag)
        self.impl.potrf(a)
        return a

    def trsm(self, diag, rect, tag=None):
        if diag.shape[0] != diag.shape[1] or rect.shape[1] != diag.shape[0]:
            raise DimensionError("trsm: rect must have as many columns as diag")
        if diag.shape[0] and not np.all(np.diagonal(diag)):
            raise SingularBlock("triangular block has a zero on its diagonal")
        self._record("trsm", tag)
        self.impl.trsm(diag, rect)
        return rect

    def syrk(self, target, source, tag=None):
        """target <- target - source @ source.T (lower triangle only)."""
        if target.shape[0] != target.shape[1] or target.shape[0] != source.shape[0]:
            raise DimensionError("syrk: target must be square with source's row count")
        self._record("syrk", tag)
        self.impl.syrk(target, source)
        return target

    def syrk_packed(self, buf, source, tag=None):
        """Packed-lower variant of syrk used for the RL update workspace."""
        t = source.shape[0]
        if buf.shape[0] != t * (t + 1) // 2:
            raise DimensionError("syrk_packed: buffer does not hold a t(t+1)/2 triangle")
        self._record("syrk", tag)
        self.impl.syrk_packed(buf, source)
        return buf

    def gemm(self, target, left, right, tag=None):
        """target <- target - left @ right.T."""
        if (
            target.shape[0] != left.shape[0]
            or target.shape[1] != right.shape[0]
            or left.shape[1] != right.shape[1]
        ):
            raise DimensionError("gemm: nonconformable operands")
        self._record("gemm", tag)
        self.impl.gemm(target, left, right)
        return target


class HostBackend(KernelBackend):
    name = "host-reference"
