"""Command-line interface: ``supchol {analyze,factor,solve,bench,profile}``.

Exit status: 0 success, 1 usage error, 2 numerical or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .bench import METHODS, bench, performance_profile, read_timings, write_profile, write_timings
from .errors import DeviceMemoryExceeded, SupcholError
from .kernels import HostBackend, get_implementation
from .matrix import read_matrix_market
from .offload import OffloadConfig, ledger_summary
from .ordering import read_permutation
from .pipeline import analyze, factorize
from .solver import read_vector, residual, write_vector

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _build_parser():
    p = _Parser(prog="supchol", description="Supernodal sparse Cholesky factorization.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def pipeline_args(sp):
        sp.add_argument("--matrix", required=True, help="Matrix Market file (symmetric)")
        sp.add_argument("--perm", help="elimination order, one 1-based index per line")
        sp.add_argument("--merge-cap", type=float, default=0.25, help="max storage growth from merging")
        sp.add_argument("--no-refine", action="store_true", help="skip partition refinement")

    def factor_args(sp):
        sp.add_argument("--method", choices=("rl", "rlb"), default="rl")
        sp.add_argument("--backend", choices=("host", "simdev"), default="host")
        sp.add_argument("--rl-threshold", type=float, default=600000)
        sp.add_argument("--rlb-threshold", type=float, default=750000)
        sp.add_argument("--variant", choices=("streamed", "aggregated"), default="streamed")
        sp.add_argument("--device-memory", type=int, help="device update-storage limit in bytes")
        sp.add_argument("--ledger", help="write the transfer ledger CSV here (simdev only)")
        sp.add_argument("--kernels", choices=("auto", "compiled", "python"), default=None)

    a = sub.add_parser("analyze", help="symbolic analysis report")
    pipeline_args(a)

    f = sub.add_parser("factor", help="numeric factorization")
    pipeline_args(f)
    factor_args(f)

    s = sub.add_parser("solve", help="factor and solve A x = b")
    pipeline_args(s)
    factor_args(s)
    s.add_argument("--rhs", help="right-hand side, one value per line (default: A @ ones)")
    s.add_argument("--out", help="solution file (default: stdout)")

    b = sub.add_parser("bench", help="time methods on matrices")
    b.add_argument("--matrix", action="append", required=True, help="repeatable")
    b.add_argument("--methods", default="rl,rlb", help=f"comma list from {','.join(METHODS)}")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--kernels", choices=("auto", "compiled", "python"), default=None)
    b.add_argument("--merge-cap", type=float, default=0.25)
    b.add_argument("--output", help="timing CSV (default: stdout)")

    pr = sub.add_parser("profile", help="performance profile from a timing CSV")
    pr.add_argument("--timings", required=True)
    pr.add_argument("--output", help="profile CSV (default: stdout)")
    return p


def _load(args):
    with open(args.matrix) as fh:
        A = read_matrix_market(fh)
    perm = None
    if args.perm:
        with open(args.perm) as fh:
            perm = read_permutation(fh, A.n)
    return A, analyze(A, perm, args.merge_cap, refine=not args.no_refine)


def _factor(args, an):
    backend = HostBackend(get_implementation(args.kernels) if args.kernels else None)
    cfg = None
    if args.backend == "simdev":
        variant = "rl" if args.method == "rl" else f"rlb-{args.variant}"
        cfg = OffloadConfig(args.rl_threshold, args.rlb_threshold, variant, args.device_memory)
    t0 = time.perf_counter()
    fac = factorize(an, args.method, cfg, backend)
    elapsed = time.perf_counter() - t0
    if fac.ledger is not None and args.ledger:
        with open(args.ledger, "w") as fh:
            fac.ledger.to_csv(fh)
    return fac, elapsed


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_analyze(args):
    _, an = _load(args)
    _emit(an.report())


def _cmd_factor(args):
    _, an = _load(args)
    fac, elapsed = _factor(args, an)
    out = {"method": args.method, "backend": args.backend, "seconds": elapsed, **an.report()}
    if fac.ledger is not None:
        rep = ledger_summary(fac.ledger)
        out["ledger"] = {"counts": rep.counts, "bytes": rep.bytes, "offloaded_supernodes": rep.offloaded}
    _emit(out)


def _cmd_solve(args):
    A, an = _load(args)
    if args.rhs:
        with open(args.rhs) as fh:
            b = read_vector(fh)
    else:
        b = A.matvec(np.ones(A.n))
    fac, _ = _factor(args, an)
    x = fac.solve(b)
    if args.out:
        with open(args.out, "w") as fh:
            write_vector(x, fh)
    else:
        write_vector(x, sys.stdout)
    print(f"backward error {residual(A, x, b):.3e}", file=sys.stderr)


def _cmd_bench(args):
    methods = [m for m in args.methods.split(",") if m]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise UsageError(f"unknown method(s): {', '.join(unknown)}")
    mats = []
    for path in args.matrix:
        with open(path) as fh:
            mats.append((path, read_matrix_market(fh)))
    rows = bench(mats, methods, args.repeats, args.kernels, {"merge_cap": args.merge_cap})
    _write(args.output, lambda fh: write_timings(rows, fh))


def _cmd_profile(args):
    with open(args.timings) as fh:
        rows = read_timings(fh)
    prof = performance_profile(rows)
    _write(args.output, lambda fh: write_profile(prof, fh))


def _write(path, fn):
    if path:
        with open(path, "w") as fh:
            fn(fh)
    else:
        fn(sys.stdout)


_COMMANDS = {
    "analyze": _cmd_analyze,
    "factor": _cmd_factor,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "profile": _cmd_profile,
}


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (SupcholError, OSError, ArithmeticError, DeviceMemoryExceeded, ValueError) as exc:
        print(f"supchol: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
