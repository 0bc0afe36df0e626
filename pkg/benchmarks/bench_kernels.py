#!/usr/bin/env python3
"""Benchmark the compiled hot kernels against the pure-Python fallback.

The two backends produce bit-identical results (asserted here on every
workload), so this measures speed only. Run:

    python benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fabricsim._kernels import pure
from fabricsim.graphs import build_grid, build_octavalent_mesh

try:
    from fabricsim._kernels import _speed
except ImportError:
    _speed = None


def edge_arrays(g):
    eu = np.ascontiguousarray([e[0] for e in g.edges], dtype=np.int32)
    ev = np.ascontiguousarray([e[1] for e in g.edges], dtype=np.int32)
    return eu, ev


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def bench(name, compiled_fn, pure_fn, args):
    if _speed is None:
        out_p, dt_p = timed(pure_fn, *args)
        print(f"{name:34s} pure {dt_p:8.3f}s   (compiled backend not built)")
        return
    out_c, dt_c = timed(compiled_fn, *args)
    out_p, dt_p = timed(pure_fn, *args)
    same = list(out_c) == list(out_p) if isinstance(out_p, (list, tuple)) else out_c == out_p
    assert same, f"{name}: backends disagree"
    print(f"{name:34s} compiled {dt_c:8.3f}s   pure {dt_p:8.3f}s   speedup {dt_p / dt_c:6.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    opts = parser.parse_args()

    grid = build_grid(3, 3)
    mesh = build_octavalent_mesh(3, 3)
    geu, gev = edge_arrays(grid)
    meu, mev = edge_arrays(mesh)

    trials = 200_000 if opts.quick else 2_000_000
    slots = 2_000_000 if opts.quick else 20_000_000

    print(f"kernel benchmark ({'quick' if opts.quick else 'full'} workloads)\n")
    bench(
        "enumerate 2^12 subsets (grid 3x3)",
        lambda: _speed.disconnection_counts(9, geu, gev),
        lambda: pure.disconnection_counts(9, geu, gev),
        (),
    )
    if not opts.quick:
        bench(
            "enumerate 2^20 subsets (mesh 3x3)",
            lambda: _speed.disconnection_counts(9, meu, mev),
            lambda: pure.disconnection_counts(9, meu, mev),
            (),
        )
    bench(
        f"monte carlo {trials:.0e} trials",
        lambda: _speed.disconnection_mc(9, geu, gev, 0.05, trials, 7),
        lambda: pure.disconnection_mc(9, geu, gev, 0.05, trials, 7),
        (),
    )
    bench(
        f"flapping link {slots:.0e} slots",
        lambda: _speed.flapping_run(0.01, 0.04, 1e-6, 0.3, slots, 7),
        lambda: pure.flapping_run(0.01, 0.04, 1e-6, 0.3, slots, 7),
        (),
    )


if __name__ == "__main__":
    main()
