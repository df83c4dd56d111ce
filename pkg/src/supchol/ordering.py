"""Fill-reducing orderings: external permutation files and a greedy
minimum-degree fallback."""

import heapq

import numpy as np

from .errors import DimensionError, ParseError, ValidationError
from .matrix import Permutation

__all__ = ["read_permutation", "write_permutation", "minimum_degree"]


def read_permutation(stream, n):
    """Read ``n`` whitespace-separated 1-based indices.

    The k-th entry is the original index of the column placed k-th, i.e. the
    file lists the elimination order.
    """
    tokens = stream.read().split()
    if len(tokens) != n:
        raise DimensionError(f"expected {n} indices, found {len(tokens)}")
    try:
        order = np.array([int(t) for t in tokens], dtype=np.int64) - 1
    except ValueError:
        raise ParseError("permutation entries must be integers") from None
    if n and (order.min() < 0 or order.max() >= n or np.unique(order).size != n):
        raise ValidationError("permutation file is not a bijection on 1..n")
    return Permutation.from_order(order)


def write_permutation(p, stream):
    stream.write("\n".join(str(int(i) + 1) for i in p.order))
    stream.write("\n")


def minimum_degree(A):
    """Greedy minimum-degree ordering on the explicit elimination graph.

    Eliminating a vertex turns its neighbourhood into a clique. Degrees are
    exact (no supervariables, no approximation); ties go to the smallest
    original index.
    """
    n = A.n
    adj = [set() for _ in range(n)]
    c = A.col_of_entry
    off = A.rowidx != c
    for i, j in zip(A.rowidx[off].tolist(), c[off].tolist()):
        adj[i].add(j)
        adj[j].add(i)

    heap = [(len(adj[v]), v) for v in range(n)]
    heapq.heapify(heap)
    done = np.zeros(n, dtype=bool)
    order = []
    while heap:
        d, v = heapq.heappop(heap)
        if done[v] or d != len(adj[v]):
            continue
        done[v] = True
        order.append(v)
        nbrs = adj[v]
        for u in nbrs:
            au = adj[u]
            au.discard(v)
            au |= nbrs
            au.discard(u)
            heapq.heappush(heap, (len(au), u))
        adj[v] = set()
    return Permutation.from_order(order)
