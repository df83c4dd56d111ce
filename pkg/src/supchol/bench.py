"""Timing harness and performance profiles over (matrix, method) runs."""

from __future__ import annotations

import csv
import math
import statistics
import time
from collections import defaultdict

from .errors import SupcholError, ValidationError
from .kernels import HostBackend, get_implementation
from .offload import OffloadConfig
from .pipeline import analyze, factorize

__all__ = ["METHODS", "run_method", "bench", "write_timings", "read_timings", "performance_profile", "write_profile"]

# name -> (driver method, offload variant or None)
METHODS = {
    "rl": ("rl", None),
    "rlb": ("rlb", None),
    "rl-simdev": ("rl", "rl"),
    "rlb-aggregated": ("rlb", "rlb-aggregated"),
    "rlb-streamed": ("rlb", "rlb-streamed"),
}


def run_method(analysis, method, kernels=None, rl_threshold=600000, rlb_threshold=750000):
    """Factor once with a named method; ``kernels`` picks the dense-kernel build."""
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {sorted(METHODS)}")
    driver, variant = METHODS[method]
    backend = HostBackend(get_implementation(kernels) if kernels else None)
    cfg = None if variant is None else OffloadConfig(rl_threshold, rlb_threshold, variant)
    return factorize(analysis, driver, cfg, backend)


def bench(matrices, methods, repeats=3, kernels=None, analysis_kwargs=None, clock=time.perf_counter):
    """Time every method on every matrix.

    ``matrices`` is a sequence of ``(name, matrix)`` pairs; ``methods`` holds
    method names or ``(name, callable(analysis))`` pairs. Returns rows of
    ``(matrix, method, seconds, status)``: seconds is the median over
    ``repeats`` factorizations, or None when any run failed.
    """
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    rows = []
    for mname, A in matrices:
        try:
            an = analyze(A, **(analysis_kwargs or {}))
        except (SupcholError, ArithmeticError, ValueError):
            an = None
        for meth in methods:
            label, fn = (meth, None) if isinstance(meth, str) else meth
            if fn is None:
                fn = lambda a, _m=label: run_method(a, _m, kernels)  # noqa: E731
            times = []
            status = "ok"
            try:
                if an is None:
                    raise ValidationError("analysis failed")
                for _ in range(repeats):
                    t0 = clock()
                    fn(an)
                    times.append(clock() - t0)
            except (SupcholError, ArithmeticError, MemoryError, ValueError):
                status = "fail"
            rows.append((mname, label, statistics.median(times) if status == "ok" else None, status))
    return rows


def write_timings(rows, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["matrix", "method", "seconds", "status"])
    for m, meth, sec, status in rows:
        w.writerow([m, meth, "" if sec is None else repr(float(sec)), status])


def read_timings(stream):
    rows = []
    for rec in csv.DictReader(stream):
        try:
            m, meth, sec, status = rec["matrix"], rec["method"], rec["seconds"], rec["status"]
        except KeyError as exc:
            raise ValidationError(f"timing CSV lacks column {exc}") from None
        ok = status == "ok" and sec not in ("", None)
        rows.append((m, meth, float(sec) if ok else None, "ok" if ok else "fail"))
    return rows


def performance_profile(rows):
    """Step-function performance profile.

    For method ``m`` the ratio on problem ``p`` is ``t[p,m] / min_m' t[p,m']``
    (infinite when the run failed or is missing).
    ``rho_m(tau)`` is the fraction of problems with ratio ``<= tau``. Returns
    ``{method: [(tau, rho), ...]}`` with breakpoints at ``tau = 1`` and at
    every distinct finite ratio of that method, ascending.
    """
    rows = list(rows)
    if not rows:
        raise ValidationError("performance profile needs at least one timing row")
    times = defaultdict(dict)
    methods = []
    for m, meth, sec, status in rows:
        if meth not in methods:
            methods.append(meth)
        ok = status == "ok" and sec is not None and math.isfinite(sec)
        times[m][meth] = float(sec) if ok else math.inf
    problems = list(times)
    ratios = {meth: [] for meth in methods}
    for p in problems:
        best = min(times[p].get(meth, math.inf) for meth in methods)
        for meth in methods:
            t = times[p].get(meth, math.inf)
            if math.isinf(t) or math.isinf(best):
                r = math.inf
            elif best == 0.0:
                r = 1.0 if t == 0.0 else math.inf
            else:
                r = t / best
            ratios[meth].append(r)
    n = len(problems)
    out = {}
    for meth in sorted(methods):
        rs = ratios[meth]
        taus = sorted({1.0} | {r for r in rs if math.isfinite(r)})
        out[meth] = [(tau, sum(r <= tau for r in rs) / n) for tau in taus]
    return out


def write_profile(profile, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["method", "tau", "rho"])
    for meth, steps in profile.items():
        for tau, rho in steps:
            w.writerow([meth, repr(float(tau)), repr(float(rho))])
