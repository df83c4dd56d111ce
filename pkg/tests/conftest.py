import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from supchol.matrix import SymmetricSparseMatrix  # noqa: E402
from supchol.symbolic import build_etree, detect_supernodes, symbolic_factor  # noqa: E402

# Row pattern of L for the 15-column reference example, 1-based:
# row i -> columns j <= i with L(i, j) != 0. Already closed under fill.
REF15_ROWS = {
    1: [1], 2: [1, 2], 3: [3], 4: [3, 4], 5: [5],
    6: [1, 2, 5, 6], 7: [1, 2, 5, 6, 7], 8: [3, 4, 8], 9: [3, 4, 8, 9],
    10: [10], 11: [10, 11], 12: [8, 9, 12],
    13: [3, 4, 5, 6, 7, 8, 9, 12, 13],
    14: [1, 2, 5, 6, 7, 10, 11, 12, 13, 14],
    15: [5, 6, 7, 10, 11, 12, 13, 14, 15],
}


def ref15_matrix(diag=16.0, off=1.0):
    r, c, v = [], [], []
    for i, cols in REF15_ROWS.items():
        for j in cols:
            r.append(i - 1)
            c.append(j - 1)
            v.append(diag if i == j else off)
    return SymmetricSparseMatrix.from_coo(15, r, c, v)


def dense_symbolic(pattern):
    """Boolean fill of a symmetric pattern by dense elimination (lower part)."""
    L = np.tril(np.asarray(pattern, dtype=bool))
    n = L.shape[0]
    for j in range(n):
        below = np.flatnonzero(L[j + 1 :, j]) + j + 1
        for a in below:
            L[below[below >= a], a] = True
    return L


@pytest.fixture(scope="session")
def ref15():
    A = ref15_matrix()
    tree = build_etree(A)
    structure = symbolic_factor(A, tree)
    part = detect_supernodes(structure, tree)
    return {"A": A, "tree": tree, "structure": structure, "partition": part}


_SESSION_START = []


def pytest_sessionstart(session):
    import time

    _SESSION_START.append(time.perf_counter())


def pytest_terminal_summary(terminalreporter):
    import time

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    elapsed = time.perf_counter() - _SESSION_START[0]
    tr.write_line(f"session wall time {elapsed:.1f} s (budget 300 s): {'PASS' if elapsed <= 300 else 'FAIL'}")
