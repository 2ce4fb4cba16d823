"""Compare the compiled and pure-Python kernels on the two hot loops.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--json results.json]

For each case the best wall time over ``--repeat`` runs is reported per
backend, with the speedup and the largest difference between the outputs.
"""

import argparse
import json
import sys
import time

import numpy as np

from malab import _kernels
from malab.grid import TorusGrid
from malab.weights import WeightSpec, eval_weight


def obstacle(grid, seed=0, amp=0.05):
    rng = np.random.default_rng(seed)
    X = grid.coords()
    v = np.zeros(grid.shape)
    for _ in range(4):
        k = rng.integers(-3, 4, size=grid.ndim)
        v += rng.normal() * np.cos(2 * np.pi * sum(ki * xi for ki, xi in zip(k, X)) + rng.uniform(0, 2 * np.pi))
    return amp * v / np.abs(v).max()


def envelope_case(n, N):
    g = TorusGrid(n, N)
    h = np.ascontiguousarray(obstacle(g).ravel())

    def run(kern):
        psi = h.copy()
        sweeps, _ = kern.envelope_sweeps(psi, h, n, N, g.spacing ** 2, 1e-12, 200000, 1.0)
        return psi, sweeps

    return f"envelope n={n} N={N}", run


def conjugate_case(num_t, num_s):
    spec = WeightSpec("LogP", 3, 2)
    t = np.linspace(0.0, 50.0, num_t)
    w = np.ascontiguousarray(eval_weight(spec, t), dtype=float)
    s = np.linspace(0.0, float(spec.derivative(50.0)), num_s)

    def run(kern):
        vals, arg = kern.conjugate_sweep(t, w, s)
        return vals, len(arg)

    return f"conjugate t={num_t} s={num_s}", run


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)
    if _kernels.compiled_backend is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    cases = [envelope_case(1, 32), envelope_case(1, 64), envelope_case(2, 8), envelope_case(2, 16),
             conjugate_case(65537, 2001), conjugate_case(400001, 20001)]
    rows = []
    print(f"{'case':<28}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, run in cases:
        tc, (oc, _) = best_time(lambda: run(_kernels.compiled_backend), args.repeat)
        tp, (op, _) = best_time(lambda: run(_kernels.python_backend), args.repeat)
        diff = float(np.abs(np.asarray(oc) - np.asarray(op)).max())
        rows.append({"case": name, "cython": tc, "python": tp, "speedup": tp / tc, "max_diff": diff})
        print(f"{name:<28}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}{diff:>12.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
