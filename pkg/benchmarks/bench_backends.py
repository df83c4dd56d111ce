"""Compare the compiled and NumPy dense-kernel builds on the same factorizations.

    python3 benchmarks/bench_backends.py [--repeats N] [--output timings.csv]

Prints a timing CSV (matrix,method,seconds,status) where each method is
``<driver>@<kernels>``, followed by per-matrix speedups of compiled over python.
"""

import argparse
import sys

from supchol.bench import bench, run_method, write_timings
from supchol.generators import grid_laplacian, grid_nested_dissection, random_spd
from supchol.kernels import available_implementations


def corpus():
    for k in (30, 60, 100):
        yield f"grid2d-{k}-nd", grid_laplacian(k), grid_nested_dissection(k)
    for k in (10, 16):
        yield f"grid3d-{k}-nd", grid_laplacian(k, 3), grid_nested_dissection(k, 3)
    yield "rand-500", random_spd(500, 0.01, 5), None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--output")
    args = ap.parse_args(argv)

    impls = available_implementations()
    if "compiled" not in impls:
        print("compiled kernels not built; only the python build is timed", file=sys.stderr)
    rows = []
    for name, A, perm in corpus():
        methods = [
            (f"{drv}@{impl}", lambda a, d=drv, i=impl: run_method(a, d, i))
            for drv in ("rl", "rlb")
            for impl in impls
        ]
        rows += bench([(name, A)], methods, args.repeats, analysis_kwargs={"perm": perm})

    out = open(args.output, "w") if args.output else sys.stdout
    write_timings(rows, out)
    if args.output:
        out.close()

    t = {(m, meth): s for m, meth, s, st in rows if st == "ok"}
    if "compiled" in impls:
        print("\nmatrix,driver,speedup_compiled_over_python")
        for m in dict.fromkeys(r[0] for r in rows):
            for drv in ("rl", "rlb"):
                c, p = t.get((m, f"{drv}@compiled")), t.get((m, f"{drv}@python"))
                if c and p:
                    print(f"{m},{drv},{p / c:.2f}")


if __name__ == "__main__":
    main()
