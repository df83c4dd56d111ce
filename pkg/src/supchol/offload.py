"""Host/device execution of the right-looking drivers on a simulated device.

Supernodes at or above a size threshold run their dense kernels on the
device; everything else stays on the host. The device is simulated: it
holds copies of panels and update buffers, runs the same kernels as the
host, and accounts for resident bytes. Every transfer and kernel launch is
appended to a :class:`TransferLedger`, which is what the schedule checks
and memory comparisons look at.

Device kernels always write update products into zeroed buffers that the
host then adds into its panels, so the factor is bit-identical to the
host-only drivers (the kernels form ``0 - P`` and ``T + (-P) == T - P``).
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DeviceMemoryExceeded, ValidationError
from .kernels import HostBackend, new_panel
from .numeric import (
    FactorPanels,
    assemble_update,
    block_pairs,
    factor_supernode,
)

__all__ = [
    "VALUE_BYTES",
    "VARIANTS",
    "OffloadConfig",
    "LedgerEvent",
    "TransferLedger",
    "SimulatedDevice",
    "dispatch",
    "run_rl_offloaded",
    "run_rlb_offloaded",
    "ledger_summary",
    "schedule_template",
    "matches_template",
]

VALUE_BYTES = 8
VARIANTS = ("rl", "rlb-aggregated", "rlb-streamed")


@dataclass(frozen=True)
class OffloadConfig:
    rl_threshold: float = 600000
    rlb_threshold: float = 750000
    variant: str = "rl"
    # bytes of update-matrix storage; panels are tracked but not limited
    device_memory_limit: Optional[int] = None

    def __post_init__(self):
        if self.rl_threshold < 0 or self.rlb_threshold < 0:
            raise ValidationError("offload thresholds must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.device_memory_limit is not None and self.device_memory_limit < 0:
            raise ValidationError("device memory limit must be nonnegative")

    @property
    def threshold(self):
        return self.rl_threshold if self.variant == "rl" else self.rlb_threshold


class LedgerEvent(NamedTuple):
    kind: str  # "H2D", "D2H" or "kernel"
    bytes: int
    sync: str  # "sync" or "async"
    supernode: int  # 0-based
    label: str


class TransferLedger:
    """Append-only record of transfers and kernel launches."""

    def __init__(self):
        self._events = []
        self.peak_update_bytes = 0
        self.peak_resident_bytes = 0

    def append(self, kind, nbytes, sync, supernode, label):
        if kind not in ("H2D", "D2H", "kernel"):
            raise ValidationError(f"bad ledger event kind {kind!r}")
        self._events.append(LedgerEvent(kind, int(nbytes), sync, int(supernode), label))

    @property
    def events(self):
        return tuple(self._events)

    def __len__(self):
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def for_supernode(self, s):
        return [e for e in self._events if e.supernode == s]

    def supernodes(self):
        return sorted({e.supernode for e in self._events})

    def to_csv(self, stream):
        """Write ``event_index,kind,bytes,sync,supernode,label`` (supernode 1-based)."""
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["event_index", "kind", "bytes", "sync", "supernode", "label"])
        for i, e in enumerate(self._events):
            w.writerow([i, e.kind, e.bytes, e.sync, e.supernode + 1, e.label])


class SimulatedDevice:
    """Device-resident buffers with capacity accounting.

    Kernels are the host implementation's. ``limit`` (bytes) bounds the
    update-matrix storage resident at any time; panel copies are accounted
    in ``peak_resident_bytes`` but not limited.
    """

    def __init__(self, limit=None, backend=None, ledger=None):
        self.limit = limit
        self.backend = backend if backend is not None else HostBackend()
        self.ledger = ledger if ledger is not None else TransferLedger()
        self.resident = 0
        self.update_resident = 0
        self._alloc = {}
        self._pending = set()  # supernodes whose panel D2H has not completed

    # memory -----------------------------------------------------------------
    def allocate(self, key, nbytes, supernode, what, update=False):
        if update and self.limit is not None and self.update_resident + nbytes > self.limit:
            raise DeviceMemoryExceeded(supernode, nbytes, self.update_resident, self.limit, what)
        self._alloc[key] = (nbytes, update)
        self.resident += nbytes
        if update:
            self.update_resident += nbytes
            self.ledger.peak_update_bytes = max(self.ledger.peak_update_bytes, self.update_resident)
        self.ledger.peak_resident_bytes = max(self.ledger.peak_resident_bytes, self.resident)

    def free(self, key):
        nbytes, update = self._alloc.pop(key)
        self.resident -= nbytes
        if update:
            self.update_resident -= nbytes

    # transfers --------------------------------------------------------------
    def upload(self, s, panel):
        nbytes = panel.size * VALUE_BYTES
        self.allocate(("panel", s), nbytes, s, "panel")
        self.ledger.append("H2D", nbytes, "sync", s, "panel")
        dev = new_panel(*panel.shape)
        dev[...] = panel
        return dev

    def download_panel(self, s, dev, host):
        """Asynchronous copy back; completion is deferred to :meth:`wait`."""
        self.ledger.append("D2H", dev.size * VALUE_BYTES, "async", s, "panel")
        host[...] = dev
        self._pending.add(s)

    def download_update(self, s, nbytes, label="update"):
        self.ledger.append("D2H", nbytes, "sync", s, label)

    def kernel(self, s, op):
        self.ledger.append("kernel", 0, "sync", s, op)

    # completion -------------------------------------------------------------
    def host_read(self, s):
        """Guard for host access to a panel; the host must not touch a panel
        whose download is still in flight."""
        if s in self._pending:
            raise RuntimeError(f"host read of supernode {s + 1} before its transfer completed")

    def wait(self, s=None):
        if s is None:
            self._pending.clear()
        else:
            self._pending.discard(s)

    @property
    def pending(self):
        return frozenset(self._pending)


def dispatch(partition, s, config):
    """``"host"`` when the supernode's size is below the active threshold."""
    return "host" if partition.size(s) < config.threshold else "device"


def _factor_on_device(device, panels, s, partition):
    """H2D, potrf, trsm, async D2H of the factored panel. Returns the device copy."""
    host = panels[s]
    dev = device.upload(s, host)
    m = int(partition.ncols[s])
    device.kernel(s, "potrf")
    if dev.shape[0] > m:
        device.kernel(s, "trsm")
    factor_supernode(device.backend, dev, s, partition)
    device.download_panel(s, dev, host)
    return dev


def _guard_targets(device, partition, s):
    p = int(partition.sparent[s])
    while p >= 0:
        device.host_read(p)
        p = int(partition.sparent[p])


def run_rl_offloaded(A, partition, config=None, backend=None):
    """RL with offloaded supernodes: H2D(panel), potrf, trsm, async D2H(panel),
    syrk into a device update buffer, sync D2H(update), host assembly."""
    config = config if config is not None else OffloadConfig(variant="rl")
    backend = backend if backend is not None else HostBackend()
    device = SimulatedDevice(config.device_memory_limit, backend)
    panels = FactorPanels.from_matrix(A, partition)
    ws = np.zeros(_max_update(partition))
    for s in range(partition.nsuper):
        m = int(partition.ncols[s])
        t = int(partition.nrows[s]) - m
        if dispatch(partition, s, _rl(config)) == "host":
            factor_supernode(backend, panels[s], s, partition)
            if t == 0:
                continue
            buf = ws[: t * (t + 1) // 2]
            buf[:] = 0.0
            backend.syrk_packed(buf, panels[s][m:, :m], tag=(s, None))
        else:
            dev = _factor_on_device(device, panels, s, partition)
            if t == 0:
                device.free(("panel", s))
                continue
            nbytes = t * (t + 1) // 2 * VALUE_BYTES
            device.allocate(("update", s), nbytes, s, "update matrix", update=True)
            buf = np.zeros(t * (t + 1) // 2)
            device.kernel(s, "syrk")
            backend.syrk_packed(buf, dev[m:, :m], tag=(s, None))
            device.download_update(s, nbytes)
            device.free(("update", s))
            device.free(("panel", s))
        _guard_targets(device, partition, s)
        assemble_update(buf, s, panels, partition, backend.impl)
    device.wait()
    return panels, device.ledger


def _rl(config):
    if config.variant == "rl":
        return config
    return OffloadConfig(config.rl_threshold, config.rlb_threshold, "rl", config.device_memory_limit)


def _max_update(partition):
    t = partition.nrows - partition.ncols
    return int((t * (t + 1) // 2).max()) if t.size else 0


def _update_bytes(op, B, B2):
    if op == "syrk":
        return B.size * (B.size + 1) // 2 * VALUE_BYTES
    return B2.size * B.size * VALUE_BYTES


def _target(panels, op, P, B, B2, row0):
    c0 = B.dest_col
    rows = B.size if op == "syrk" else B2.size
    return panels[P][row0 : row0 + rows, c0 : c0 + B.size]


def _device_update(backend, op, dev_below, B, B2, s, P):
    """Run one update kernel on the device into a zeroed buffer."""
    rows = B.size if op == "syrk" else B2.size
    buf = new_panel(rows, B.size)
    if op == "syrk":
        backend.syrk(buf, dev_below[B.start : B.stop], tag=(s, P))
    else:
        backend.gemm(buf, dev_below[B2.start : B2.stop], dev_below[B.start : B.stop], tag=(s, P))
    return buf


def run_rlb_offloaded(A, partition, blocks, config=None, backend=None):
    """RLB with offloaded supernodes.

    ``rlb-aggregated`` runs every syrk/gemm of a supernode on the device and
    then brings all results back in one transfer; ``rlb-streamed`` brings
    each result back (and assembles it) as soon as its kernel finishes.
    """
    config = config if config is not None else OffloadConfig(variant="rlb-streamed")
    if config.variant not in ("rlb-aggregated", "rlb-streamed"):
        raise ValidationError(f"run_rlb_offloaded needs an RLB variant, got {config.variant!r}")
    streamed = config.variant == "rlb-streamed"
    backend = backend if backend is not None else HostBackend()
    device = SimulatedDevice(config.device_memory_limit, backend)
    impl = backend.impl
    panels = FactorPanels.from_matrix(A, partition)
    for s in range(partition.nsuper):
        m = int(partition.ncols[s])
        if dispatch(partition, s, config) == "host":
            factor_supernode(backend, panels[s], s, partition)
            below = panels[s][m:, :m]
            for op, P, B, B2, row0 in block_pairs(partition, blocks, s):
                target = _target(panels, op, P, B, B2, row0)
                if op == "syrk":
                    backend.syrk(target, below[B.start : B.stop], tag=(s, P))
                else:
                    backend.gemm(target, below[B2.start : B2.stop], below[B.start : B.stop], tag=(s, P))
            continue

        dev = _factor_on_device(device, panels, s, partition)
        dev_below = dev[m:, :m]
        held = []
        for k, (op, P, B, B2, row0) in enumerate(block_pairs(partition, blocks, s)):
            nbytes = _update_bytes(op, B, B2)
            device.allocate(("update", s, k), nbytes, s, f"{op} update", update=True)
            device.kernel(s, op)
            buf = _device_update(backend, op, dev_below, B, B2, s, P)
            if streamed:
                device.download_update(s, nbytes)
                device.host_read(P)
                impl.add_block(_target(panels, op, P, B, B2, row0), buf, op == "syrk")
                device.free(("update", s, k))
            else:
                held.append((k, op, P, B, B2, row0, buf, nbytes))
        if held:
            device.download_update(s, sum(h[-1] for h in held))
            for k, op, P, B, B2, row0, buf, _ in held:
                device.host_read(P)
                impl.add_block(_target(panels, op, P, B, B2, row0), buf, op == "syrk")
                device.free(("update", s, k))
        device.free(("panel", s))
    device.wait()
    return panels, device.ledger


# -- schedule templates and summaries -------------------------------------------


def _token(e):
    if e.kind == "kernel":
        return e.label
    return f"{e.kind}:{e.label}:{e.sync}"


_TEMPLATES = {
    "rl": r"H2D:panel:sync potrf (trsm D2H:panel:async syrk D2H:update:sync|D2H:panel:async)",
    "rlb-aggregated": (
        r"H2D:panel:sync potrf (trsm D2H:panel:async syrk( (syrk|gemm))* D2H:update:sync"
        r"|D2H:panel:async)"
    ),
    "rlb-streamed": (
        r"H2D:panel:sync potrf (trsm D2H:panel:async syrk D2H:update:sync"
        r"( (syrk|gemm) D2H:update:sync)*|D2H:panel:async)"
    ),
}


def schedule_template(variant):
    """Regular expression every offloaded supernode's event sequence must match
    (tokens joined by single spaces)."""
    return _TEMPLATES[variant]


def matches_template(ledger, variant):
    """True when each supernode's event subsequence matches the variant's template."""
    pat = re.compile(_TEMPLATES[variant])
    for s in ledger.supernodes():
        seq = " ".join(_token(e) for e in ledger.for_supernode(s))
        if not pat.fullmatch(seq):
            return False
    return True


@dataclass
class LedgerReport:
    counts: dict = field(default_factory=dict)
    bytes: dict = field(default_factory=dict)
    per_supernode: dict = field(default_factory=dict)
    offloaded: int = 0
    peak_update_bytes: int = 0

    def lines(self):
        out = []
        for k in ("H2D", "D2H", "kernel"):
            out.append(f"{k}: count={self.counts[k]} bytes={self.bytes[k]}")
        out.append(f"offloaded supernodes: {self.offloaded}")
        out.append(f"peak device update bytes: {self.peak_update_bytes}")
        return out


def ledger_summary(ledger):
    """Counts and bytes per event kind plus a per-supernode breakdown (keys
    sorted, supernodes 0-based)."""
    counts = Counter({"H2D": 0, "D2H": 0, "kernel": 0})
    nbytes = Counter({"H2D": 0, "D2H": 0, "kernel": 0})
    per = {}
    for e in ledger:
        counts[e.kind] += 1
        nbytes[e.kind] += e.bytes
        d = per.setdefault(e.supernode, {"H2D": 0, "D2H": 0, "kernel": 0, "D2H_bytes": 0})
        d[e.kind] += 1
        if e.kind == "D2H":
            d["D2H_bytes"] += e.bytes
    return LedgerReport(
        counts=dict(sorted(counts.items())),
        bytes=dict(sorted(nbytes.items())),
        per_supernode={k: per[k] for k in sorted(per)},
        offloaded=len(per),
        peak_update_bytes=getattr(ledger, "peak_update_bytes", 0),
    )
