"""End-to-end analysis, factorization and solve.

The column permutation applied to the input is the composition of the
fill-reducing ordering, the renumbering done by supernode merging and the
within-supernode reordering done by partition refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotPositiveDefinite, ValidationError
from .kernels import HostBackend
from .matrix import Permutation, permute_symmetric
from .numeric import factor_rl, factor_rlb
from .offload import OffloadConfig, run_rl_offloaded, run_rlb_offloaded
from .ordering import minimum_degree
from .solver import backward_solve, forward_solve
from .symbolic import (
    block_structure,
    build_etree,
    count_blocks,
    detect_supernodes,
    merge_supernodes,
    refine_partition,
    symbolic_factor,
)

__all__ = ["Analysis", "Factorization", "analyze", "factorize", "solve"]

METHODS = ("rl", "rlb")


@dataclass
class Analysis:
    matrix: object  # the input, unpermuted
    permuted: object  # P A P^T in factor numbering
    perm: Permutation  # input column -> factor column
    partition: object
    blocks: object
    fill_nnz: int  # nnz(L) before merging
    supernodes_detected: int
    supernodes_merged: int
    factor_storage: int  # stored entries after merging, explicit zeros included
    blocks_before_refine: int
    blocks_after_refine: int

    @property
    def storage_growth(self):
        """Merge-induced storage growth in percent of ``fill_nnz``."""
        return 100.0 * (self.factor_storage - self.fill_nnz) / self.fill_nnz if self.fill_nnz else 0.0

    def report(self):
        return {
            "n": self.matrix.n,
            "nnz_lower": self.matrix.nnz,
            "supernodes_before_merge": self.supernodes_detected,
            "supernodes_after_merge": self.supernodes_merged,
            "factor_nnz": self.fill_nnz,
            "factor_storage": self.factor_storage,
            "storage_growth_pct": round(self.storage_growth, 6),
            "blocks_before_refine": self.blocks_before_refine,
            "blocks_after_refine": self.blocks_after_refine,
        }


@dataclass
class Factorization:
    analysis: Analysis
    panels: object
    method: str
    ledger: Optional[object] = None

    @property
    def partition(self):
        return self.analysis.partition

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64).ravel()
        p = self.analysis.perm
        if b.size != p.n:
            raise ValidationError(f"right-hand side has length {b.size}, expected {p.n}")
        y = forward_solve(self.panels, self.partition, b[p.order])
        x = backward_solve(self.panels, self.partition, y)
        return x[p.perm]


def analyze(A, perm=None, merge_cap=0.25, refine=True):
    """Order, find supernodes, merge, refine and build the block structure."""
    A.validate()
    p0 = perm if perm is not None else minimum_degree(A)
    if p0.n != A.n:
        raise ValidationError(f"permutation has length {p0.n}, matrix has n={A.n}")
    A1 = permute_symmetric(A, p0)
    tree = build_etree(A1)
    structure = symbolic_factor(A1, tree)
    detected = detect_supernodes(structure, tree)
    merged = merge_supernodes(detected, structure, merge_cap)
    total = merged.perm.compose(p0)
    part = merged
    before = after = count_blocks(merged)
    if refine:
        rperm, part, _ = refine_partition(merged)
        total = rperm.compose(total)
        after = count_blocks(part)
    return Analysis(
        matrix=A,
        permuted=permute_symmetric(A, total),
        perm=total,
        partition=part,
        blocks=block_structure(part),
        fill_nnz=structure.nnz,
        supernodes_detected=detected.nsuper,
        supernodes_merged=part.nsuper,
        factor_storage=part.total_storage,
        blocks_before_refine=before,
        blocks_after_refine=after,
    )


def factorize(analysis, method="rl", offload=None, backend=None):
    """Numeric factorization of an analysed matrix.

    ``offload`` is an :class:`OffloadConfig` to run on the simulated device;
    for ``method="rlb"`` its variant must be one of the RLB variants.
    Pivot failures are re-raised with the original column attached.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")
    backend = backend if backend is not None else HostBackend()
    A1, part = analysis.permuted, analysis.partition
    ledger = None
    try:
        if offload is None:
            if method == "rl":
                panels = factor_rl(A1, part, backend)
            else:
                panels = factor_rlb(A1, part, analysis.blocks, backend)
        elif method == "rl":
            panels, ledger = run_rl_offloaded(A1, part, _as_variant(offload, "rl"), backend)
        else:
            variant = offload.variant if offload.variant != "rl" else "rlb-streamed"
            panels, ledger = run_rlb_offloaded(
                A1, part, analysis.blocks, _as_variant(offload, variant), backend
            )
    except NotPositiveDefinite as exc:
        original = int(analysis.perm.order[exc.column - 1]) + 1
        raise exc.with_original(original) from None
    return Factorization(analysis, panels, method, ledger)


def _as_variant(cfg, variant):
    if cfg.variant == variant:
        return cfg
    return OffloadConfig(cfg.rl_threshold, cfg.rlb_threshold, variant, cfg.device_memory_limit)


def solve(A, b, method="rl", perm=None, merge_cap=0.25):
    """Analyse, factor and solve ``A x = b`` in one call."""
    return factorize(analyze(A, perm, merge_cap), method).solve(b)
