"""Compiled kernel vs pure-Python fallback on identical pre-drawn noise.

    python benchmarks/bench_kernel.py [--horizon N] [--repeat R]
"""

import argparse
import time

import numpy as np

from stepadapt import _backend, engine, noise, problem
from stepadapt.engine import SimConfig
from stepadapt.stepsize import Kesten, Multiplicative, PowerSchedule

CASES = {
    "multiplicative/tanh": (problem.tanh_problem(1.0), Multiplicative(1.2, 0.9, 0.5)),
    "multiplicative/three_zeros": (problem.three_zeros(), Multiplicative(1.2, 0.9, 0.5)),
    "kesten/tanh": (problem.tanh_problem(1.0), Kesten(PowerSchedule(0.5))),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if not _backend.COMPILED_AVAILABLE:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'case':<30}{'python s':>10}{'compiled s':>12}{'speedup':>9}  identical")
    for name, (f, rule) in CASES.items():
        cfg = SimConfig(f, noise.gaussian(0.1), rule, x0=2.0, horizon=args.horizon, seed=1)
        tp, a = best_of(lambda: engine.simulate_raw(cfg, False, "python"), args.repeat)
        tc, b = best_of(lambda: engine.simulate_raw(cfg, False, "compiled"), args.repeat)
        same = np.array_equal(a.xs, b.xs) and np.array_equal(a.gammas, b.gammas)
        print(f"{name:<30}{tp:>10.3f}{tc:>12.4f}{tp / tc:>8.0f}x  {same}")


if __name__ == "__main__":
    main()
