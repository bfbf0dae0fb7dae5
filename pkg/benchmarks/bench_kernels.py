"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--paths 2000]

Each kernel runs on identical inputs under both backends; the table lists
the best wall time per backend and the speedup.  Outputs are compared so a
speedup never hides a mismatch.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from clruin import kernels
from clruin.claims import GammaTwo
from clruin.kernels import backends


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def volterra_case(nodes):
    g = GammaTwo(1.0)
    h = 20.0 / (nodes - 1)
    xs = h * np.arange(nodes)
    s = np.asarray(g.survival(xs), dtype=float)
    tail = np.asarray(g.tail_integral(xs), dtype=float)
    return lambda mod: mod.volterra_march(s, s, tail, 1.1 * g.mean, h, 1 / 1.1)


def panjer_case(size):
    f = np.random.default_rng(0).random(size)
    f /= f.sum()
    return lambda mod: mod.panjer_geometric(f, 0.9)


def simulate_case(paths):
    # theta = 0.1, exponential claims, barrier at kappa = 23
    barrier = 23.0 / (0.1 / 1.1)
    return lambda mod: mod.simulate_paths(kernels.KIND_EXPONENTIAL, np.array([1.0]), np.zeros(0), 1,
                                          1.0, 1.1, 0.0, barrier, 7, 0, paths, 10**7)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nodes", type=int, default=2001, help="Volterra grid size")
    ap.add_argument("--lattice", type=int, default=20001, help="Panjer lattice size")
    ap.add_argument("--paths", type=int, default=2000)
    args = ap.parse_args(argv)

    found = backends()
    if "cython" not in found:
        print("compiled backend not built; only the fallback is available")
    cases = [
        (f"volterra_march nodes={args.nodes}", volterra_case(args.nodes)),
        (f"panjer_geometric size={args.lattice}", panjer_case(args.lattice)),
        (f"simulate_paths paths={args.paths}", simulate_case(args.paths)),
    ]
    print(f"{'kernel':<34}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  match")
    for label, case in cases:
        t_py, out_py = best_of(lambda: case(found["python"]), args.repeat)
        if "cython" in found:
            t_c, out_c = best_of(lambda: case(found["cython"]), args.repeat)
            if isinstance(out_py, tuple):
                match = out_py == out_c
            else:
                match = bool(np.allclose(out_py, out_c, rtol=1e-12, atol=1e-15))
            print(f"{label:<34}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>10.1f}  {match}")
        else:
            print(f"{label:<34}{t_py:>12.4f}{'-':>12}{'-':>10}  -")


if __name__ == "__main__":
    main()
