"""Symbolic analysis: elimination tree, factor structure, supernodes,
supernode merging, partition refinement, relative indices and the row-block
structure consumed by the blocked right-looking driver.

All indices are 0-based.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ValidationError
from .matrix import Permutation, SymmetricSparseMatrix

__all__ = [
    "EliminationTree",
    "FactorStructure",
    "SupernodePartition",
    "Block",
    "BlockStructure",
    "build_etree",
    "symbolic_factor",
    "detect_supernodes",
    "merge_supernodes",
    "refine_partition",
    "relative_indices",
    "block_structure",
    "count_blocks",
]


@dataclass(frozen=True, eq=False)
class EliminationTree:
    parent: np.ndarray  # -1 marks a root

    @property
    def n(self):
        return self.parent.size

    @cached_property
    def children(self):
        kids = [[] for _ in range(self.n)]
        for j, p in enumerate(self.parent.tolist()):
            if p >= 0:
                kids[p].append(j)
        return kids


@dataclass(frozen=True, eq=False)
class FactorStructure:
    """Row indices of every column of L, diagonal first, sorted."""

    colptr: np.ndarray
    rowidx: np.ndarray

    @property
    def n(self):
        return self.colptr.size - 1

    @property
    def nnz(self):
        return int(self.colptr[-1])

    @property
    def counts(self):
        return np.diff(self.colptr)

    def rows(self, j):
        return self.rowidx[self.colptr[j] : self.colptr[j + 1]]

    @classmethod
    def from_columns(cls, cols):
        colptr = np.zeros(len(cols) + 1, dtype=np.int64)
        np.cumsum([len(c) for c in cols], out=colptr[1:])
        rowidx = np.concatenate(cols).astype(np.int64) if cols else np.zeros(0, np.int64)
        return cls(colptr, rowidx)

    def to_dense_pattern(self):
        p = np.zeros((self.n, self.n), dtype=bool)
        c = np.repeat(np.arange(self.n), self.counts)
        p[self.rowidx, c] = True
        return p


def _trapezoid(m, r):
    """Stored entries of a panel with ``m`` columns and ``r`` rows (lower part only)."""
    return m * r - m * (m - 1) // 2


@dataclass(frozen=True, eq=False)
class SupernodePartition:
    """Contiguous column ranges with their row sets and the supernodal tree.

    ``rows[s]`` is sorted and starts with the supernode's own columns.
    ``perm`` is the column renumbering (from the numbering of the structure
    the partition was derived from into this partition's numbering); it is
    the identity unless merging or refinement had to move columns.
    """

    starts: np.ndarray
    rows: tuple
    sparent: np.ndarray
    perm: Permutation = field(default=None)

    def __post_init__(self):
        if self.perm is None:
            object.__setattr__(self, "perm", Permutation.identity(int(self.starts[-1])))

    @property
    def n(self):
        return int(self.starts[-1])

    @property
    def nsuper(self):
        return self.starts.size - 1

    @cached_property
    def snode(self):
        return np.repeat(np.arange(self.nsuper, dtype=np.int64), np.diff(self.starts))

    @cached_property
    def ncols(self):
        return np.diff(self.starts)

    @cached_property
    def nrows(self):
        return np.array([r.size for r in self.rows], dtype=np.int64)

    @cached_property
    def children(self):
        kids = [[] for _ in range(self.nsuper)]
        for s, p in enumerate(self.sparent.tolist()):
            if p >= 0:
                kids[p].append(s)
        return kids

    def columns(self, s):
        return range(int(self.starts[s]), int(self.starts[s + 1]))

    def rows_below(self, s):
        return self.rows[s][self.ncols[s] :]

    def size(self, s):
        """Columns times length (row count including the diagonal block)."""
        return int(self.ncols[s] * self.nrows[s])

    def storage(self, s):
        return _trapezoid(int(self.ncols[s]), int(self.nrows[s]))

    @property
    def total_storage(self):
        return int(sum(_trapezoid(int(m), int(r)) for m, r in zip(self.ncols, self.nrows)))

    def is_ancestor(self, anc, s):
        p = int(self.sparent[s])
        while p >= 0:
            if p == anc:
                return True
            p = int(self.sparent[p])
        return False

    def structure(self):
        """Per-column structure implied by the panels (explicit zeros included)."""
        cols = []
        for s in range(self.nsuper):
            r = self.rows[s]
            for k in range(int(self.ncols[s])):
                cols.append(r[k:])
        return FactorStructure.from_columns(cols)

    def with_perm(self, perm):
        return SupernodePartition(self.starts, self.rows, self.sparent, perm)


# -- elimination tree and symbolic factorization ------------------------------


def build_etree(source):
    """Elimination tree of a FactorStructure (min below-diagonal row of each
    column) or of a matrix (union-find with path compression)."""
    if isinstance(source, FactorStructure):
        cnt = source.counts
        parent = np.full(source.n, -1, dtype=np.int64)
        has = cnt > 1
        parent[has] = source.rowidx[source.colptr[:-1][has] + 1]
        return EliminationTree(parent)
    if not isinstance(source, SymmetricSparseMatrix):
        raise TypeError("build_etree expects a FactorStructure or SymmetricSparseMatrix")
    A = source
    n = A.n
    c = A.col_of_entry
    off = A.rowidx != c
    r_off, c_off = A.rowidx[off], c[off]
    order = np.lexsort((c_off, r_off))
    rows_sorted = r_off[order].tolist()
    cols_sorted = c_off[order].tolist()
    parent = [-1] * n
    ancestor = [-1] * n
    for k, i in zip(rows_sorted, cols_sorted):
        # entry A(k, i) with i < k: walk from i towards the current root
        r = i
        while True:
            a = ancestor[r]
            if a == k:
                break
            ancestor[r] = k
            if a == -1:
                parent[r] = k
                break
            r = a
    return EliminationTree(np.array(parent, dtype=np.int64))


def symbolic_factor(A, tree):
    """Exact structure of L by row merging along the elimination tree."""
    n = A.n
    kids = tree.children
    cols = [None] * n
    for j in range(n):
        parts = [A.rowidx[A.colptr[j] : A.colptr[j + 1]]]
        for ch in kids[j]:
            parts.append(cols[ch][1:])
        cols[j] = parts[0] if len(parts) == 1 else np.unique(np.concatenate(parts))
    return FactorStructure.from_columns(cols)


# -- supernodes -----------------------------------------------------------------


def detect_supernodes(structure, tree):
    """Maximal runs of columns with ``parent(j) = j + 1`` and
    ``|struct(j)| = |struct(j + 1)| + 1``."""
    n = structure.n
    cnt = structure.counts
    par = tree.parent
    if n == 0:
        return SupernodePartition(np.zeros(1, np.int64), (), np.zeros(0, np.int64))
    j = np.arange(1, n)
    joins = (par[:-1] == j) & (cnt[:-1] == cnt[1:] + 1)
    starts = np.concatenate([[0], j[~joins], [n]]).astype(np.int64)
    ns = starts.size - 1
    rows = tuple(structure.rows(int(starts[s])).copy() for s in range(ns))
    snode = np.repeat(np.arange(ns, dtype=np.int64), np.diff(starts))
    top_parent = par[starts[1:] - 1]
    sparent = np.where(top_parent >= 0, snode[np.maximum(top_parent, 0)], -1)
    return SupernodePartition(starts, rows, sparent.astype(np.int64))


def merge_cost(m_child, r_child, m_parent, r_parent):
    """Explicit zeros added by merging a child panel into its parent panel."""
    merged = _trapezoid(m_child + m_parent, m_child + r_parent)
    return merged - _trapezoid(m_child, r_child) - _trapezoid(m_parent, r_parent)


def merge_supernodes(partition, structure, cap=0.25, trace=None):
    """Greedily merge child/parent supernode pairs, cheapest first.

    The cost of a merge is the number of explicit zeros it adds to factor
    storage; ties go to the child with the smallest supernode index. Merging
    stops before cumulative added storage would exceed ``cap`` times the
    original storage (``structure.nnz``). Merged supernodes are made
    contiguous by ordering supernode groups by their top column, which is a
    topological order of the elimination tree and so changes no fill;
    ``result.perm`` maps input columns to the new numbering.

    If ``trace`` is a list, each applied merge is appended as
    ``(child, parent, added)`` in input supernode indices.
    """
    if cap < 0:
        raise ValidationError("cap must be nonnegative")
    ns = partition.nsuper
    m = [int(x) for x in partition.ncols]
    r = [int(x) for x in partition.nrows]
    gp = [int(x) for x in partition.sparent]
    kids = [set(k) for k in partition.children]
    members = [[s] for s in range(ns)]
    key = list(range(ns))
    version = [0] * ns
    alive = [True] * ns

    heap = []

    def push(c):
        p = gp[c]
        if p >= 0:
            cost = merge_cost(m[c], r[c], m[p], r[p])
            heapq.heappush(heap, (cost, key[c], c, p, version[c], version[p]))

    for s in range(ns):
        push(s)

    budget = cap * structure.nnz
    added = 0
    while heap:
        cost, _, c, p, vc, vp = heapq.heappop(heap)
        if not alive[c] or gp[c] != p or version[c] != vc or version[p] != vp:
            continue
        if added + cost > budget:
            break
        added += cost
        if trace is not None:
            trace.append((c, p, cost))
        alive[c] = False
        m[p] += m[c]
        r[p] += m[c]
        members[p].extend(members[c])
        key[p] = min(key[p], key[c])
        kids[p].discard(c)
        for k in kids[c]:
            gp[k] = p
        kids[p] |= kids[c]
        version[p] += 1
        for k in kids[p]:
            push(k)
        push(p)

    groups = [g for g in range(ns) if alive[g]]
    starts_in = partition.starts
    order = []
    new_starts = [0]
    for g in groups:
        for s in sorted(members[g]):
            order.extend(range(int(starts_in[s]), int(starts_in[s + 1])))
        new_starts.append(len(order))
    perm = Permutation.from_order(order)
    gindex = {g: i for i, g in enumerate(groups)}
    rows = []
    sparent = []
    for g in groups:
        union = np.unique(np.concatenate([partition.rows[s] for s in members[g]]))
        rows.append(np.sort(perm.perm[union]))
        sparent.append(gindex[gp[g]] if gp[g] >= 0 else -1)
    merged = SupernodePartition(
        np.array(new_starts, dtype=np.int64), tuple(rows), np.array(sparent, dtype=np.int64), perm
    )
    return merged


# -- partition refinement ---------------------------------------------------------


def _descendant_subsets(partition):
    """For every supernode P, the local column subsets each descendant updates,
    in ascending descendant order."""
    subsets = [[] for _ in range(partition.nsuper)]
    snode = partition.snode
    starts = partition.starts
    for s in range(partition.nsuper):
        rb = partition.rows_below(s)
        if rb.size == 0:
            continue
        owners = snode[rb]
        cut = np.flatnonzero(np.diff(owners)) + 1
        for seg_rows, seg_owner in zip(np.split(rb, cut), owners[np.r_[0, cut]]):
            subsets[int(seg_owner)].append(seg_rows - starts[seg_owner])
    return subsets


def _runs(positions):
    if positions.size == 0:
        return 0
    p = np.sort(positions)
    return 1 + int(np.count_nonzero(np.diff(p) != 1))


def _refine_order(m, subsets):
    parts = [list(range(m))]
    for sub in subsets:
        S = set(int(x) for x in sub)
        hit = [i for i, part in enumerate(parts) if any(c in S for c in part)]
        if not hit:
            continue
        first, last = hit[0], hit[-1]
        hitset = set(hit)
        out = []
        for i, part in enumerate(parts):
            if i not in hitset:
                out.append(part)
                continue
            ins = [c for c in part if c in S]
            outs = [c for c in part if c not in S]
            if not outs:
                out.append(part)
                continue
            flags = [c in S for c in part]
            lo = flags.index(True)
            hi = len(flags) - 1 - flags[::-1].index(True)
            contiguous = all(flags[lo : hi + 1])
            if len(hit) == 1 and contiguous:
                pieces = [part[:lo], part[lo : hi + 1], part[hi + 1 :]]
            elif i == first and len(hit) > 1:
                pieces = [outs, ins]
            else:
                pieces = [ins, outs]
            out.extend(p for p in pieces if p)
        parts = out
    return [c for part in parts for c in part]


def count_blocks(partition):
    """Total number of RLB row blocks over all supernodes."""
    snode = partition.snode
    total = 0
    for s in range(partition.nsuper):
        rb = partition.rows_below(s)
        if rb.size:
            brk = (np.diff(rb) != 1) | (np.diff(snode[rb]) != 0)
            total += 1 + int(np.count_nonzero(brk))
    return total


def refine_partition(partition, structure=None):
    """Reorder columns inside supernodes so descendants' update targets become
    contiguous, reducing the number of RLB blocks.

    Each supernode's columns are refined against its descendants' target
    subsets (descendants in ascending order). A supernode keeps its current
    order unless the refined order strictly lowers its block count, so the
    total never increases. Returns ``(perm, partition, structure)`` with the
    structure implied by the new partition.
    """
    n = partition.n
    starts = partition.starts
    subsets = _descendant_subsets(partition)
    newpos = np.arange(n, dtype=np.int64)
    for P in range(partition.nsuper):
        subs = [s for s in subsets[P] if 1 < s.size < partition.ncols[P]]
        if not subs:
            continue
        m = int(partition.ncols[P])
        order = _refine_order(m, subs)
        local = np.empty(m, dtype=np.int64)
        local[order] = np.arange(m)
        before = sum(_runs(s) for s in subs)
        after = sum(_runs(local[s]) for s in subs)
        if after < before:
            newpos[starts[P] : starts[P] + m] = starts[P] + local
    perm = Permutation(newpos)
    rows = tuple(np.sort(newpos[r]) for r in partition.rows)
    refined = SupernodePartition(starts, rows, partition.sparent, perm)
    return perm, refined, refined.structure()


# -- relative indices and blocks -------------------------------------------------


def relative_indices(partition, s, anc):
    """Distance from the bottom of ``rows(anc)`` of every row shared by
    ``rows(s)`` and ``rows(anc)``, ordered by increasing global row."""
    if not partition.is_ancestor(anc, s):
        raise ValidationError(f"supernode {anc} is not a proper ancestor of supernode {s}")
    ra = partition.rows[anc]
    shared = np.intersect1d(partition.rows[s], ra, assume_unique=True)
    return ra.size - 1 - np.searchsorted(ra, shared)


class Block(NamedTuple):
    owner: int  # ancestor supernode whose columns hold these rows
    start: int  # first position within rows_below(s)
    stop: int
    first_row: int  # global row of the first member
    dest_row: int  # position of first_row in rows(owner)
    dest_col: int  # column offset of first_row inside owner

    @property
    def size(self):
        return self.stop - self.start


@dataclass(frozen=True, eq=False)
class BlockStructure:
    blocks: tuple  # blocks[s] is a tuple of Block

    def count(self, s):
        return len(self.blocks[s])

    @property
    def total(self):
        return sum(len(b) for b in self.blocks)

    def __getitem__(self, s):
        return self.blocks[s]


def block_structure(partition):
    """Split every supernode's below-diagonal rows into maximal runs of
    consecutive global rows that fall inside one ancestor's columns."""
    snode = partition.snode
    starts = partition.starts
    out = []
    for s in range(partition.nsuper):
        rb = partition.rows_below(s)
        if rb.size == 0:
            out.append(())
            continue
        owners = snode[rb]
        brk = np.flatnonzero((np.diff(rb) != 1) | (np.diff(owners) != 0)) + 1
        lo = np.r_[0, brk]
        hi = np.r_[brk, rb.size]
        blocks = []
        for a, b in zip(lo.tolist(), hi.tolist()):
            row = int(rb[a])
            own = int(owners[a])
            dest_row = int(np.searchsorted(partition.rows[own], row))
            blocks.append(Block(own, a, b, row, dest_row, row - int(starts[own])))
        out.append(tuple(blocks))
    return BlockStructure(tuple(out))
