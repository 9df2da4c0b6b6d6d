"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel at training-relevant shapes and prints per-call times
for both backends. Usage:

    python benchmarks/bench_kernels.py [--reps 50]

The same comparison can be made end to end by running the trainer under
MINIMAX_DSAC_BACKEND=numpy vs =numba.
"""

import argparse
import time

import numpy as np
from threadpoolctl import threadpool_limits

from minimax_dsac.kernels import numba_backend, numpy_backend

SHAPES = [
    ("critic 256x(9-64-64-2)", np.array([9, 64, 64, 2], dtype=np.int64), 256),
    ("critic 256x(9-256-256-2)", np.array([9, 256, 256, 2], dtype=np.int64), 256),
    ("policy 256x(6-64-64-2)", np.array([6, 64, 64, 2], dtype=np.int64), 256),
    ("policy 1x(6-64-64-2)", np.array([6, 64, 64, 2], dtype=np.int64), 1),
]


def _params_for(dims, rng):
    n = int(sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1)))
    return rng.standard_normal(n) * 0.3


def best_of(fn, reps, repeats=7):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        times.append((time.perf_counter() - t0) / reps)
    return min(times) * 1e6


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    backends = [("numba", numba_backend), ("numpy", numpy_backend)]
    print(f"{'kernel':<34s} {'shape':<28s} {'numba us':>10s} {'numpy us':>10s} {'ratio':>7s}")
    with threadpool_limits(limits=1, user_api="blas"):
        for label, dims, batch in SHAPES:
            params = _params_for(dims, rng)
            x = rng.standard_normal((batch, int(dims[0])))
            gy = rng.standard_normal((batch, int(dims[-1])))
            rows = {}
            for name, mod in backends:
                _, cache = mod.forward_cached(params, dims, x)
                rows[name] = {
                    "forward": best_of(lambda m=mod: m.forward(params, dims, x), args.reps),
                    "forward_cached": best_of(
                        lambda m=mod: m.forward_cached(params, dims, x), args.reps
                    ),
                    "backward": best_of(
                        lambda m=mod, c=cache: m.backward(params, dims, x, c, gy),
                        args.reps,
                    ),
                }
            for kernel in ("forward", "forward_cached", "backward"):
                nb, npy = rows["numba"][kernel], rows["numpy"][kernel]
                print(f"{kernel:<34s} {label:<28s} {nb:>10.1f} {npy:>10.1f} "
                      f"{npy / nb:>6.2f}x")

        z = rng.standard_normal((256, 256))
        g = rng.standard_normal((256, 256))
        for kernel, nb_fn, np_fn in [
            ("gelu 256x256", lambda: numba_backend.gelu(z), lambda: numpy_backend.gelu(z)),
            ("gelu_vjp 256x256", lambda: numba_backend.gelu_vjp(z, g),
             lambda: numpy_backend.gelu_vjp(z, g)),
        ]:
            nb = best_of(nb_fn, args.reps)
            npy = best_of(np_fn, args.reps)
            print(f"{kernel:<34s} {'elementwise':<28s} {nb:>10.1f} {npy:>10.1f} "
                  f"{npy / nb:>6.2f}x")

        n = 50_000
        p = rng.standard_normal(n)
        grad = rng.standard_normal(n)
        m = np.zeros(n)
        v = np.zeros(n)
        nb = best_of(lambda: numba_backend.adam_update(p, grad, m, v, 3, 1e-4, 0.9, 0.999, 1e-8),
                     args.reps)
        npy = best_of(lambda: numpy_backend.adam_update(p, grad, m, v, 3, 1e-4, 0.9, 0.999, 1e-8),
                      args.reps)
        print(f"{'adam 50k params':<34s} {'elementwise':<28s} {nb:>10.1f} {npy:>10.1f} "
              f"{npy / nb:>6.2f}x")


if __name__ == "__main__":
    main()
