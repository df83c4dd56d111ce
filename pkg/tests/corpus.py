"""Shared test corpus: 2D/3D grid Laplacians and random sparse SPD matrices.

Grids with an ``-nd`` suffix use a geometric nested-dissection ordering
supplied as an external permutation; the others use the built-in minimum
degree ordering.
"""

from functools import lru_cache

from supchol.generators import grid_laplacian, grid_nested_dissection, random_spd
from supchol.pipeline import analyze

SPECS = (
    [("grid2d", k, False) for k in (10, 20, 30, 50, 70, 100)]
    + [("grid2d", k, True) for k in (20, 50, 100)]
    + [("grid3d", k, False) for k in (6, 10)]
    + [("grid3d", k, True) for k in (12, 16)]
    + [("rand", (n, d, seed), False) for seed, (n, d) in enumerate(
        [(50, 0.1), (100, 0.05), (200, 0.03), (300, 0.02), (400, 0.01), (500, 0.01), (500, 0.005), (250, 0.04)]
    )]
)


def _name(kind, arg, nd):
    if kind == "rand":
        n, _, seed = arg
        return f"rand-{n}-s{seed}"
    return f"{kind}-{arg}" + ("-nd" if nd else "")


NAMES = [_name(*s) for s in SPECS]


@lru_cache(maxsize=None)
def matrix(name):
    kind, arg, nd = SPECS[NAMES.index(name)]
    if kind == "rand":
        n, d, seed = arg
        return random_spd(n, d, seed), None
    dim = 2 if kind == "grid2d" else 3
    return grid_laplacian(arg, dim), (grid_nested_dissection(arg, dim) if nd else None)


@lru_cache(maxsize=None)
def analysis(name):
    A, perm = matrix(name)
    return analyze(A, perm)
