#!/usr/bin/env python3
"""Compare the compiled kernel extension against the NumPy fallback.

The scalar kernels sit in the inner loop of time integration (one kernel
matrix per RK stage) and of the special-function grid checks, so this is
the part the extension accelerates.  Run after an editable install:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from grabert import kernels


def best_of(func, repeats=5, min_time=0.05):
    """Best wall-clock rate over a few repeats, auto-scaled iteration count."""
    n = 1
    while True:
        start = time.perf_counter()
        for _ in range(n):
            func()
        elapsed = time.perf_counter() - start
        if elapsed >= min_time:
            break
        n *= 4
    best = elapsed / n
    for _ in range(repeats - 1):
        start = time.perf_counter()
        for _ in range(n):
            func()
        best = min(best, (time.perf_counter() - start) / n)
    return best


def main():
    rng = np.random.default_rng(0)
    names = kernels.available_backends()
    if "compiled" not in names:
        print("compiled extension not built; benchmarking the fallback only")
    backends = [(name, kernels.get_backend(name)) for name in names]

    cases = []
    for d in (4, 8, 16, 64):
        w = rng.uniform(0.0, 1.0, size=d)
        w /= w.sum()
        cases.append((f"kernel_from_weights d={d:<3}", "kernel_from_weights", (w,)))
    eta_grid = np.linspace(-1.0, 1.0, 100_000)
    cases.append(("fd on 1e5-point grid     ", "fd", (eta_grid,)))
    cases.append(("fd_prime on 1e5 grid     ", "fd_prime", (eta_grid[1:-1],)))
    x = rng.uniform(0.0, 1.0, size=100_000)
    y = rng.uniform(0.0, 1.0, size=100_000)
    cases.append(("logmean on 1e5 pairs     ", "logmean", (x, y)))

    header = f"{'case':<28}" + "".join(f"{name:>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, attr, args in cases:
        times = [best_of(lambda m=mod, a=args: getattr(m, attr)(*a)) for _, mod in backends]
        row = f"{label:<28}" + "".join(f"{t * 1e6:>12.2f}us" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
