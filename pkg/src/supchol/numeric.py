"""Right-looking supernodal numeric factorization.

Two drivers share the panel storage:

* ``factor_rl`` factors a supernode, forms its whole update matrix in a
  preallocated packed workspace with one syrk, then assembles it into the
  ancestors through relative indices.
* ``factor_rlb`` factors a supernode and applies its update block pair by
  block pair with syrk/gemm directly into the ancestors' panels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite, ValidationError
from .kernels import HostBackend, new_panel

__all__ = [
    "FactorPanels",
    "UpdateWorkspace",
    "factor_rl",
    "factor_rlb",
    "assemble_update",
    "workspace_capacity",
    "unpack_update",
]


class FactorPanels:
    """One dense column-major panel per supernode, ``|rows(J)| x |J|``.

    Entries above each column's diagonal position are never read.
    """

    def __init__(self, partition, panels=None):
        self.partition = partition
        if panels is None:
            panels = [new_panel(int(r), int(c)) for r, c in zip(partition.nrows, partition.ncols)]
        self.panels = panels

    def __getitem__(self, s):
        return self.panels[s]

    def __len__(self):
        return len(self.panels)

    @classmethod
    def from_matrix(cls, A, partition):
        """Scatter the lower triangle of ``A`` into zeroed panels."""
        if A.n != partition.n:
            raise ValidationError("matrix and partition dimensions differ")
        fp = cls(partition)
        starts = partition.starts
        for s in range(partition.nsuper):
            c0, c1 = int(starts[s]), int(starts[s + 1])
            lo, hi = A.colptr[c0], A.colptr[c1]
            ar = A.rowidx[lo:hi]
            rows = partition.rows[s]
            pos = np.searchsorted(rows, ar)
            if np.any(pos >= rows.size) or np.any(rows[np.minimum(pos, rows.size - 1)] != ar):
                raise ValidationError(f"matrix entries of supernode {s} fall outside its row set")
            cols = np.repeat(np.arange(c1 - c0), np.diff(A.colptr[c0 : c1 + 1]))
            fp.panels[s][pos, cols] = A.values[lo:hi]
        return fp

    def copy(self):
        return FactorPanels(self.partition, [p.copy(order="F") for p in self.panels])

    def lower_entries(self):
        """Global ``(rows, cols, values)`` of L, explicit zeros included."""
        part = self.partition
        rs, cs, vs = [], [], []
        for s in range(part.nsuper):
            rows = part.rows[s]
            p = self.panels[s]
            for k, j in enumerate(part.columns(s)):
                rs.append(rows[k:])
                cs.append(np.full(rows.size - k, j, dtype=np.int64))
                vs.append(p[k:, k])
        if not rs:
            z = np.zeros(0)
            return z.astype(np.int64), z.astype(np.int64), z
        return np.concatenate(rs), np.concatenate(cs), np.concatenate(vs)

    def to_scipy(self):
        import scipy.sparse as sp

        r, c, v = self.lower_entries()
        n = self.partition.n
        return sp.csc_matrix((v, (r, c)), shape=(n, n))

    def to_dense(self):
        r, c, v = self.lower_entries()
        n = self.partition.n
        d = np.zeros((n, n))
        d[r, c] = v
        return d

    def max_abs(self):
        return max((float(np.abs(np.tril(p)).max()) for p in self.panels if p.size), default=0.0)

    def bit_equal(self, other):
        """Bitwise equality of the stored lower trapezoids."""
        for a, b in zip(self.panels, other.panels):
            m = a.shape[1]
            for k in range(m):
                if a[k:, k].tobytes() != b[k:, k].tobytes():
                    return False
        return len(self.panels) == len(other.panels)


def workspace_capacity(partition):
    """Largest update matrix, ``t(t+1)/2`` with ``t`` the below-diagonal row count."""
    t = partition.nrows - partition.ncols
    return int((t * (t + 1) // 2).max()) if t.size else 0


@dataclass
class UpdateWorkspace:
    """Single contiguous buffer holding one packed lower-trapezoidal update
    matrix at a time (column k holds rows k..t-1)."""

    buffer: np.ndarray

    @classmethod
    def for_partition(cls, partition):
        return cls(np.zeros(workspace_capacity(partition)))

    @property
    def capacity(self):
        return self.buffer.size

    def view(self, t):
        size = t * (t + 1) // 2
        assert size <= self.buffer.size, "update matrix exceeds preallocated workspace"
        v = self.buffer[:size]
        v[:] = 0.0
        return v


def unpack_update(buf, t):
    """Dense lower-triangular ``t x t`` copy of a packed update matrix."""
    out = np.zeros((t, t))
    cols, rows = np.triu_indices(t)
    out[rows, cols] = buf[: t * (t + 1) // 2]
    return out


# -- shared per-supernode steps ------------------------------------------------


def factor_supernode(backend, panel, s, partition):
    """potrf on the diagonal block, trsm on the rows below it."""
    m = int(partition.ncols[s])
    diag = panel[:m, :m]
    try:
        backend.potrf(diag, tag=(s, s))
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(int(partition.starts[s]) + exc.column) from None
    if panel.shape[0] > m:
        backend.trsm(diag, panel[m:, :m], tag=(s, s))


def assembly_plan(partition, s):
    """Per ancestor of ``s``: ``(owner, k0, k1, panel_rows, panel_cols)``.

    Columns k0..k1-1 of the update matrix land in ``owner``; update rows
    k0..t-1 land at panel rows derived from the relative indices.
    """
    rb = partition.rows_below(s)
    if rb.size == 0:
        return []
    owners = partition.snode[rb]
    cut = np.flatnonzero(np.diff(owners)) + 1
    lo = np.r_[0, cut]
    hi = np.r_[cut, rb.size]
    plan = []
    for k0, k1 in zip(lo.tolist(), hi.tolist()):
        P = int(owners[k0])
        prow = partition.rows[P]
        # panel row = |rows(P)| - 1 - relative index
        pos = np.searchsorted(prow, rb[k0:]).astype(np.int64)
        cols = (rb[k0:k1] - partition.starts[P]).astype(np.int64)
        plan.append((P, k0, k1, pos, cols))
    return plan


def assemble_update(workspace, s, panels, partition, impl=None):
    """Add the packed update matrix of ``s`` into its ancestors' panels.

    ``workspace`` is an UpdateWorkspace (its current view is used) or the
    packed array itself. Returns the number of update entries assembled.
    """
    impl = impl if impl is not None else _impl_of(None)
    t = int(partition.nrows[s] - partition.ncols[s])
    buf = workspace.buffer[: t * (t + 1) // 2] if isinstance(workspace, UpdateWorkspace) else workspace
    count = 0
    for P, k0, k1, pos, cols in assembly_plan(partition, s):
        count += impl.assemble_packed(panels[P], buf, t, k0, k1, pos, cols)
    return count


def _impl_of(backend):
    if backend is not None:
        return backend.impl
    from .kernels import IMPLEMENTATION

    return IMPLEMENTATION


def block_pairs(partition, blocks, s):
    """Update-kernel targets of supernode ``s`` in RLB order.

    Yields ``(op, owner, B, B2, row0)``: for ``op == "syrk"`` B2 is B and the
    target is the diagonal part of B in ``owner``; for ``"gemm"`` the target
    is rows of B2 (starting at panel row ``row0``) times the columns of B.
    """
    bl = blocks[s]
    for i, B in enumerate(bl):
        prow = partition.rows[B.owner]
        yield "syrk", B.owner, B, B, B.dest_row
        for B2 in bl[i + 1 :]:
            yield "gemm", B.owner, B, B2, int(np.searchsorted(prow, B2.first_row))


# -- drivers -------------------------------------------------------------------


def factor_rl(A, partition, backend=None, on_update=None, assembly_counter=None):
    """Right-looking factorization with a preallocated update workspace.

    ``on_update(s, packed_update)`` is called after each update matrix is
    formed (before assembly); ``assembly_counter`` (a list) receives the
    number of entries assembled per supernode.
    """
    backend = backend if backend is not None else HostBackend()
    panels = FactorPanels.from_matrix(A, partition)
    ws = UpdateWorkspace.for_partition(partition)
    for s in range(partition.nsuper):
        panel = panels[s]
        factor_supernode(backend, panel, s, partition)
        m = int(partition.ncols[s])
        t = panel.shape[0] - m
        if t == 0:
            continue
        buf = ws.view(t)
        backend.syrk_packed(buf, panel[m:, :m], tag=(s, None))
        if on_update is not None:
            on_update(s, buf)
        n_assembled = assemble_update(buf, s, panels, partition, backend.impl)
        if assembly_counter is not None:
            assembly_counter.append(n_assembled)
    return panels


def factor_rlb(A, partition, blocks, backend=None):
    """Right-looking blocked factorization: no workspace, one syrk per block
    and one gemm per ordered block pair, written straight into ancestors."""
    backend = backend if backend is not None else HostBackend()
    panels = FactorPanels.from_matrix(A, partition)
    for s in range(partition.nsuper):
        panel = panels[s]
        factor_supernode(backend, panel, s, partition)
        m = int(partition.ncols[s])
        below = panel[m:, :m]
        for op, P, B, B2, row0 in block_pairs(partition, blocks, s):
            target = panels[P]
            c0 = B.dest_col
            if op == "syrk":
                backend.syrk(
                    target[row0 : row0 + B.size, c0 : c0 + B.size],
                    below[B.start : B.stop],
                    tag=(s, P),
                )
            else:
                backend.gemm(
                    target[row0 : row0 + B2.size, c0 : c0 + B.size],
                    below[B2.start : B2.stop],
                    below[B.start : B.stop],
                    tag=(s, P),
                )
    return panels
