#!/usr/bin/env python3
"""Time every solve route across a grid of (n, m) shapes; CSV to stdout.

The expected column ordering at wide shapes is chol < eigh < svd, with cg
depending heavily on conditioning (drive lambda down to watch it degrade).
The naive oracle only runs where m stays under its cap.

Usage:
    python scripts/run_method_comparison.py
    python scripts/run_method_comparison.py --shapes 128x16384 256x65536 --lambda 1e-6
"""

import argparse

from fisher_solve import CSV_HEADER, DEFAULT_NAIVE_CAP, Method, csv_row, generate_problem, time_method


def parse_shape(text):
    n, _, m = text.partition("x")
    return int(n), int(m)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--shapes", nargs="+", type=parse_shape,
                        default=[(64, 4096), (128, 16384), (256, 16384), (256, 65536)],
                        metavar="NxM")
    parser.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--warmup", type=int, default=2)
    parser.add_argument("--tol", type=float, default=1e-8, help="cg tolerance")
    args = parser.parse_args()

    print(CSV_HEADER)
    for n, m in args.shapes:
        system = generate_problem(args.seed, n, m, args.lam).system
        methods = [Method.CHOL, Method.SVD_EIGH, Method.SVD_DIRECT, Method.CG]
        if m <= DEFAULT_NAIVE_CAP:
            methods.append(Method.NAIVE)
        for method in methods:
            record = time_method(
                system, method,
                warmup=args.warmup, repeats=args.repeats, seed=args.seed, tol=args.tol,
            )
            print(csv_row(record))


if __name__ == "__main__":
    main()
