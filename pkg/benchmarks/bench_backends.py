#!/usr/bin/env python3
"""Side-by-side timing of the numba and numpy kernel backends.

``QUSHK_BACKEND`` is read once at qushk import, so each backend gets its
own subprocess: the script re-invokes itself with ``--measure`` and the
flag set, then prints a combined table. Workloads cover the two hot
paths (the log-moment reduction and the table solver) plus a map-sized
end-to-end sweep; times are best-of-repeat wall clock, with the one-time
import + first-call cost reported separately.

Usage: python3 benchmarks/bench_backends.py [--samples N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _best_of(repeat, fn):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        if dt < best:
            best = dt
    return best


def measure(n_samples: int) -> dict:
    import numpy as np

    t0 = time.perf_counter()
    from qushk import active_backend, compute_xu, estimate_xu, hk_sample, HKParams
    from qushk.hk_model import xu_table
    from qushk._kernels import solve_xu, xu_moment_sums

    table = xu_table()  # build the surface outside the timed sections
    values = hk_sample(HKParams.from_alpha_k(5.0, 1.0), n_samples, 1).values
    xu_moment_sums(values[:64])
    solve_xu(1.2, -0.5, *table, 0.5, 100.0, 0.0, 10.0, 60)
    warmup = time.perf_counter() - t0

    results = {"backend": active_backend(), "warmup_s": warmup}

    results["reduction_ms"] = _best_of(20, lambda: xu_moment_sums(values)) * 1e3

    rng = np.random.default_rng(2)
    points = list(zip(rng.uniform(0.3, 2.8, 2000), rng.uniform(-0.7, -0.01, 2000)))

    def run_solver():
        for x, u in points:
            solve_xu(x, u, *table, 0.5, 100.0, 0.0, 10.0, 60)

    results["solver_us"] = _best_of(5, run_solver) / len(points) * 1e6

    windows = [
        hk_sample(HKParams.from_alpha_k(5.0, 1.0), 4096, 100 + i).values
        for i in range(256)
    ]

    def run_sweep():
        for w in windows:
            estimate_xu(w)

    results["sweep_s"] = _best_of(3, run_sweep)
    results["n_samples"] = n_samples
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=1_000_000,
                        help="reduction workload size (default 1e6)")
    parser.add_argument("--measure", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.measure:
        json.dump(measure(args.samples), sys.stdout)
        return 0

    rows = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, QUSHK_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--measure",
             "--samples", str(args.samples)],
            capture_output=True, text=True, env=env,
        )
        if proc.returncode != 0:
            print(f"{backend} run failed:\n{proc.stderr}", file=sys.stderr)
            return 1
        rows[backend] = json.loads(proc.stdout)

    nb, np_ = rows["numba"], rows["numpy"]
    print(f"reduction workload: {nb['n_samples']:,} samples\n")
    print(f"{'workload':<38}{'numba':>12}{'numpy':>12}{'ratio':>9}")
    for label, key, unit in (
        ("moment reduction", "reduction_ms", "ms"),
        ("table solver, per inversion", "solver_us", "us"),
        ("256-window estimate sweep", "sweep_s", "s"),
        ("import + first call", "warmup_s", "s"),
    ):
        a, b = nb[key], np_[key]
        print(f"{label:<38}{a:>9.3f} {unit:<3}{b:>9.3f} {unit:<3}{b / a:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
