"""Compare the compiled and pure-Python layer kernels.

Each case compiles relaxed and restricted diagrams along random orderings
and reports the best of several repeats per backend.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""

import argparse
import json
import random
import sys
import time

from ddorder.fastdd import fast_compile
from ddorder.graph import BaConfig, generate_ba
from ddorder.kernels import available_backends

CASES = [
    # problem, n, nu, weight_high, width, graphs
    ("misp", 30, 4, 1, 10, 20),
    ("misp", 30, 4, 1, 100, 10),
    ("misp", 60, 4, 1, 500, 3),
    ("mcp", 20, 4, 10, 10, 20),
    ("mcp", 20, 4, 10, 100, 10),
    ("mcp", 40, 4, 10, 500, 3),
]


def workload(problem, n, nu, hi, count):
    rng = random.Random(n * 31 + count)
    out = []
    for i in range(count):
        g = generate_ba(BaConfig(n, nu, 1, hi, seed=i))
        out.append((g, rng.sample(range(n), n)))
    return out


def run_case(backend, problem, jobs, width):
    bounds = []
    t0 = time.perf_counter()
    for g, order in jobs:
        for mode in ("relaxed", "restricted"):
            bounds.append(fast_compile(problem, g, order, mode, width, backend).bound)
    return time.perf_counter() - t0, bounds


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels unavailable; only the Python backend will be timed", file=sys.stderr)
    results = []
    print(f"{'problem':7s} {'n':>3s} {'W':>5s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup")
    for problem, n, nu, hi, width, count in CASES:
        jobs = workload(problem, n, nu, hi, count)
        row = {"problem": problem, "n": n, "width": width, "graphs": count}
        ref = None
        for b in backends:
            best = float("inf")
            for _ in range(args.repeat):
                dt, bounds = run_case(b, problem, jobs, width)
                best = min(best, dt)
            if ref is None:
                ref = bounds
            elif bounds != ref:
                raise SystemExit(f"backends disagree on {problem} n={n} W={width}")
            row[b] = best
        speed = row["python"] / row["cython"] if "cython" in row else 1.0
        row["speedup"] = speed
        results.append(row)
        print(f"{problem:7s} {n:3d} {width:5d} " + " ".join(f"{row[b] * 1e3:8.1f}ms" for b in backends)
              + f"   {speed:6.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
