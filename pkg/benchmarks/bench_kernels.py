#!/usr/bin/env python3
"""Benchmark the compiled kernel against the numpy fallback.

Times the raw mixture-pdf evaluation at several shapes and one full bound
fit (the dominant pipeline cost) on each available backend.

Run:  python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from windband import kernels
from windband.synth import sample_band_errors
from windband.uncertainty import build_error_histogram, fit_mixture_bounds
from windband.variability import VariabilityModel

VM = VariabilityModel(0.231, 0.197)


def time_mixture_pdf(impl, n_e, n_k, repeats):
    rng = np.random.default_rng(0)
    e = np.ascontiguousarray(rng.uniform(-6, 6, n_e))
    mus = np.ascontiguousarray(rng.uniform(-1, 2, n_k))
    sigmas = np.ascontiguousarray(VM.sigma(mus))
    weights = np.full(n_k, 1.0 / n_k)
    impl.mixture_pdf(e, mus, sigmas, weights)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        impl.mixture_pdf(e, mus, sigmas, weights)
    return (time.perf_counter() - start) / repeats


def time_full_fit(backend):
    rng = np.random.default_rng(7)
    errors = sample_band_errors(rng, 5000, -1.0, 2.0, VM)
    hist = build_error_histogram(errors, lead_hours=1.0)
    kernels.set_backend(backend)
    start = time.perf_counter()
    fit = fit_mixture_bounds(hist, VM)
    elapsed = time.perf_counter() - start
    return elapsed, fit


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000, help="repeats per pdf shape")
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled extension not built; benchmarking the fallback only")

    shapes = [(64, 64), (128, 256), (512, 512)]
    print(f"\nmixture_pdf microbenchmark ({args.repeats} repeats)")
    print(f"{'shape (n_e x n_k)':>20} " + " ".join(f"{b:>12}" for b in backends)
          + ("   speedup" if len(backends) > 1 else ""))
    for n_e, n_k in shapes:
        times = {b: time_mixture_pdf(kernels._BACKENDS[b], n_e, n_k, args.repeats)
                 for b in backends}
        row = f"{f'{n_e} x {n_k}':>20} " + " ".join(f"{times[b]*1e6:>10.1f}us" for b in backends)
        if "cython" in times and "numpy" in times:
            row += f"   {times['numpy'] / times['cython']:>6.2f}x"
        print(row)

    print("\nfull bound fit (5000 errors, default search)")
    original = kernels.backend_name()
    try:
        results = {}
        for backend in backends:
            elapsed, fit = time_full_fit(backend)
            results[backend] = (elapsed, fit)
            print(f"{backend:>10}: {elapsed:.3f}s  "
                  f"bounds ({fit.mu_minus:.4f}, {fit.mu_plus:.4f})")
        if len(results) > 1:
            values = {b: (f.mu_minus, f.mu_plus) for b, (_, f) in results.items()}
            spread = max(abs(a - b)
                         for (a, _), (b, _) in zip(values.values(), list(values.values())[1:]))
            print(f"cross-backend bound agreement: max |diff| = {spread:.2e}")
    finally:
        kernels.set_backend(original)


if __name__ == "__main__":
    main()
