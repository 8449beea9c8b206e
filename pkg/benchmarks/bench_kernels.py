"""Benchmark the jitted kernels against the pure-numpy fallback.

Times every kernel on the shapes the sampler loop actually produces
(N=500 draws in 10 dimensions by default) and prints a side-by-side
table. Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --n 4000 --dim 25 --repeats 500
"""

import argparse
import statistics
import time

import numpy as np

from cais.kernels import numba_impl, numpy_impl
from cais.spd import cholesky


def make_inputs(n, dim, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    cov = a @ a.T + dim * np.eye(dim)
    samples = np.ascontiguousarray(rng.standard_normal((n, dim)))
    log_weights = np.ascontiguousarray(rng.standard_cauchy(n) * 3.0)
    norm = np.exp(log_weights - log_weights.max())
    weights = np.ascontiguousarray(norm / norm.sum())
    mean = rng.standard_normal(dim)
    return {
        "samples": samples,
        "diffs": np.ascontiguousarray(samples - mean),
        "chol": np.ascontiguousarray(cholesky(cov)),
        "log_weights": log_weights,
        "weights": weights,
        "center": np.ascontiguousarray(rng.standard_normal(dim)),
    }


def calls(inp):
    return [
        (
            "batch_mahalanobis_sq",
            lambda impl: impl.batch_mahalanobis_sq(inp["diffs"], inp["chol"]),
        ),
        (
            "weighted_scatter",
            lambda impl: impl.weighted_scatter(
                inp["samples"], inp["weights"], inp["center"]
            ),
        ),
        ("log_sum_exp", lambda impl: impl.log_sum_exp(inp["log_weights"])),
        (
            "normalized_from_log",
            lambda impl: impl.normalized_from_log(inp["log_weights"]),
        ),
        ("sum_sq", lambda impl: impl.sum_sq(inp["weights"])),
    ]


def time_call(fn, repeats):
    fn()  # warm caches (and trigger compilation on the jitted path)
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=500, help="draws per batch")
    parser.add_argument("--dim", type=int, default=10, help="space dimension")
    parser.add_argument(
        "--repeats", type=int, default=2000, help="timed calls per kernel"
    )
    args = parser.parse_args()

    inp = make_inputs(args.n, args.dim)
    print(f"kernel timings, N={args.n} d={args.dim}, median of {args.repeats} calls")
    if numba_impl is None:
        print("numba backend unavailable; timing the numpy fallback only\n")
        header = f"{'kernel':<22}{'numpy':>12}"
    else:
        header = f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for name, call in calls(inp):
        t_np = time_call(lambda: call(numpy_impl), args.repeats)
        if numba_impl is None:
            print(f"{name:<22}{t_np * 1e6:>10.2f}us")
            continue
        got_np = call(numpy_impl)
        got_nb = call(numba_impl)
        np.testing.assert_allclose(got_nb, got_np, rtol=1e-10, atol=1e-12)
        t_nb = time_call(lambda: call(numba_impl), args.repeats)
        print(
            f"{name:<22}{t_np * 1e6:>10.2f}us{t_nb * 1e6:>10.2f}us"
            f"{t_np / t_nb:>9.2f}x"
        )


if __name__ == "__main__":
    main()
