"""Benchmark: compiled Cython kernels vs the pure-numpy fallback.

Runs each hot kernel on identically-seeded inputs with both backends,
verifies agreement, and prints a timing table.

    python benchmarks/bench_kernels.py [--points 1000000] [--repeats 5]
"""

import argparse
import math
import time

import numpy as np

from uaplab import activations as act
from uaplab._kernels import pure

try:
    from uaplab._kernels import _ckernels as compiled
except ImportError:
    compiled = None


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(points: int, repeats: int) -> None:
    rng = np.random.default_rng(0)
    shifted = act.by_name("leaky_shifted_paper")
    cubic = act.construct_transitive(
        act.ActivationSpec(
            "cube", [act.Branch(-math.inf, math.inf, "power", (1.0, 3.0, 0.0, 0.0))]
        ),
        0.5,
        1.0,
    )
    x = rng.uniform(-50.0, 50.0, points)
    pts2 = rng.uniform(-10.0, 10.0, (points // 8, 2))
    b2 = np.array([1.0, 0.5])
    amp = rng.uniform(-2.0, 2.0, 256)
    lo = rng.uniform(-4.0, 2.0, 256)
    hi = lo + rng.uniform(0.0, 3.0, 256)
    xt = rng.uniform(-5.0, 5.0, points // 8)

    cases = []
    for spec, label in ((shifted, "affine"), (cubic, "affine+power")):
        edges, kinds, par, vedges = spec._table
        y = spec(x)
        cases += [
            (f"act_eval[{label}] {points:.0e} pts",
             lambda m, e=edges, k=kinds, p=par: m.act_eval(e, k, p, x)),
            (f"act_invert[{label}] {points:.0e} pts",
             lambda m, e=edges, k=kinds, p=par, v=vedges, yy=y: m.act_invert(e, k, p, v, yy)),
        ]
    edges, kinds, par, vedges = shifted._table
    cases += [
        (f"s_iter[n=10] {points // 8:.0e}x2 pts",
         lambda m: m.s_iter(edges, kinds, par, pts2, b2, 10)),
        (f"s_inv_iter[n=10] {points // 8:.0e}x2 pts",
         lambda m: m.s_inv_iter(edges, kinds, par, vedges,
                                m.s_iter(edges, kinds, par, pts2, b2, 10), b2, 10)),
        (f"tree_eval[256 terms] {points // 8:.0e} pts",
         lambda m: m.tree_eval(amp, lo, hi, xt)),
    ]

    header = f"{'kernel':<38}{'pure':>12}{'cython':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, call in cases:
        t_pure = best_time(lambda: call(pure), repeats)
        if compiled is None:
            print(f"{label:<38}{t_pure * 1e3:>10.2f}ms{'n/a':>12}{'n/a':>10}")
            continue
        ref = call(pure)
        out = call(compiled)
        if not np.allclose(ref, out, rtol=1e-9, atol=1e-9):
            raise AssertionError(f"backend mismatch on {label}")
        t_cy = best_time(lambda: call(compiled), repeats)
        print(
            f"{label:<38}{t_pure * 1e3:>10.2f}ms{t_cy * 1e3:>10.2f}ms"
            f"{t_pure / t_cy:>9.2f}x"
        )
    if compiled is None:
        print("\ncompiled backend unavailable; showing pure timings only")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    run(args.points, args.repeats)
