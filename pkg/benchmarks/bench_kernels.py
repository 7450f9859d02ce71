"""Benchmark the compiled kernels against the numpy fallback.

Run from the repository root:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from claritk.kernels import _pykernels

try:
    from claritk.kernels import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(42)
    values = rng.normal(10.0, 2.0, 1_000_000)

    n_steps = int(72 * 3600 / 10)  # 72 h at dt = 10 s
    x0 = rng.uniform(0.0, 8.0, 10)
    v_up = np.full(n_steps, 4.5e-4)
    x_f = np.full(n_steps, 3.2)

    cases = {
        "outlier filter (1e6, n=20)":
            lambda mod: mod.remove_outliers(values, 20, 1.96),
        "moving average (1e6, n=20)":
            lambda mod: mod.moving_average(values, 20),
        "ten-layer 72 h @ dt=10 s":
            lambda mod: mod.tenlayer_integrate(
                x0, v_up, 2.2e-4, x_f, 4, 10.0, 0.5, 1,
                4.0e-3, 0.4, 2.86, 0.1, n_steps, 360),
    }

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("c", _ckernels))
    else:
        print("compiled extension not built; benchmarking the fallback only")

    header = f"{'kernel':<32}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, call in cases.items():
        row = f"{label:<32}"
        times = []
        for _, mod in backends:
            t = timeit(lambda: call(mod))
            times.append(t)
            row += f"{t * 1e3:>10.1f}ms"
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
