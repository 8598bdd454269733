#!/usr/bin/env python3
"""Desk-scale complexity study for the Cholesky route.

Sweeps the parameter count m at fixed sample count n, then n at fixed m, and
fits the scaling exponent of each sweep. The ideal exponents are 1 for the m
sweep and 2 for the n sweep while the n^2 m matmul dominates; the n^3
factorization term pulls the n sweep upward once n grows.

Usage:
    python scripts/run_scaling.py            # full study, a minute or two
    python scripts/run_scaling.py --quick    # small shapes, a few seconds
"""

import argparse

from fisher_solve import CSV_HEADER, Axis, Method, csv_row, fit_scaling, generate_problem, time_method


def sweep(method, fixed_name, fixed_size, vary_name, sizes, lam, seed, warmup, repeats):
    records = []
    for size in sizes:
        n = size if vary_name == "n" else fixed_size
        m = size if vary_name == "m" else fixed_size
        system = generate_problem(seed, n, m, lam).system
        record = time_method(system, method, warmup=warmup, repeats=repeats, seed=seed)
        print(csv_row(record))
        records.append(record)
    axis = Axis.VARY_N if vary_name == "n" else Axis.VARY_M
    fit = fit_scaling(records, axis)
    print(
        f"# {method.value}: vary {vary_name} at {fixed_name}={fixed_size}: "
        f"exponent={fit.exponent:.3f} r_squared={fit.r_squared:.4f}"
    )
    return fit


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true", help="small shapes for a fast look")
    parser.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--warmup", type=int, default=2)
    args = parser.parse_args()

    if args.quick:
        m_sizes = [1024, 2048, 4096, 8192]
        fixed_n = 32
        n_sizes = [16, 32, 64, 128]
        fixed_m = 8192
    else:
        m_sizes = [4096, 8192, 16384, 32768, 65536]
        fixed_n = 64
        n_sizes = [64, 128, 256, 512]
        fixed_m = 65536

    print(CSV_HEADER)
    sweep(Method.CHOL, "n", fixed_n, "m", m_sizes, args.lam, args.seed, args.warmup, args.repeats)
    sweep(Method.CHOL, "m", fixed_m, "n", n_sizes, args.lam, args.seed, args.warmup, args.repeats)


if __name__ == "__main__":
    main()
