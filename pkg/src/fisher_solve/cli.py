"""The fisher-solve command line tool.

Subcommands: ``gen`` writes a seeded problem to FMAT files, ``solve`` reads
FMAT inputs and writes the solution vector, ``bench`` times one method and
emits a CSV record, ``scaling`` sweeps one dimension and fits the scaling
exponent, ``check`` cross-validates every method against the dense oracle.

The environment variable FISHER_SOLVE_THREADS caps BLAS/LAPACK parallelism
(0 or unset means automatic).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import fmat
from .bench import (
    CSV_HEADER,
    Axis,
    Kind,
    csv_row,
    fit_scaling,
    generate_problem,
    resolve_solver,
    time_method,
)
from .core import DampedSystem, FactorizationError, Method, ScoreMatrix, Variant
from .solvers import (
    solve_cg,
    solve_chol,
    solve_chol_hermitian,
    solve_naive,
    solve_realpart,
    solve_rvb,
    solve_svd_direct,
    solve_svd_eigh,
)

_METHOD_NAMES = [m.value for m in Method]
_VARIANT_NAMES = [v.value for v in Variant]
_KIND_NAMES = [k.value for k in Kind]


def _parse_fix(text: str) -> tuple[str, int]:
    name, _, value = text.partition("=")
    if name not in ("n", "m") or not value:
        raise ValueError(f"--fix expects n=<int> or m=<int>, got {text!r}")
    size = int(value)
    if size < 1:
        raise ValueError(f"--fix size must be >= 1, got {size}")
    return name, size


def _parse_vary(text: str) -> tuple[str, list[int]]:
    name, _, sweep = text.partition("=")
    parts = sweep.split(":")
    if name not in ("n", "m") or len(parts) != 3:
        raise ValueError(f"--vary expects n|m=START:STOP:COUNT, got {text!r}")
    start, stop, count = (int(p) for p in parts)
    if start < 1 or stop < start or count < 3:
        raise ValueError("--vary needs START >= 1, STOP >= START, COUNT >= 3")
    sizes = sorted({int(round(s)) for s in np.geomspace(start, stop, count)})
    return name, sizes


def _add_problem_flags(sp, with_kind=True):
    sp.add_argument("--n", type=int, required=True, help="sample count (rows of S)")
    sp.add_argument("--m", type=int, required=True, help="parameter count (columns of S)")
    sp.add_argument("--lambda", dest="lam", type=float, default=1e-3, help="damping strength")
    sp.add_argument("--seed", type=int, default=0, help="problem generator seed")
    if with_kind:
        sp.add_argument("--kind", choices=_KIND_NAMES, default="real", help="problem family")


def _add_method_flags(sp):
    sp.add_argument("--method", choices=_METHOD_NAMES, required=True)
    sp.add_argument("--variant", choices=_VARIANT_NAMES, default="plain")
    sp.add_argument("--tol", type=float, default=1e-10, help="cg stopping tolerance")
    sp.add_argument("--max-iter", type=int, default=None, help="cg iteration cap (default m)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fisher-solve",
        description="Solve and benchmark the damped Fisher system (S^T S + lambda I) x = v.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a seeded problem to FMAT files")
    _add_problem_flags(gen)
    gen.add_argument("--out", required=True, metavar="PREFIX",
                     help="writes PREFIX.S.fmat and PREFIX.v.fmat (plus PREFIX.f.fmat when structured)")
    gen.set_defaults(func=_cmd_gen)

    solve = sub.add_parser("solve", help="read FMAT inputs, solve, write FMAT x")
    solve.add_argument("scores", help="FMAT file holding S")
    solve.add_argument("rhs", help="FMAT vector: v for most methods, f (length n) for rvb")
    solve.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    _add_method_flags(solve)
    solve.add_argument("--out", default=None, metavar="PATH", help="write x as an FMAT vector")
    solve.set_defaults(func=_cmd_solve)

    benchp = sub.add_parser("bench", help="time one method on one generated problem")
    _add_problem_flags(benchp)
    _add_method_flags(benchp)
    benchp.add_argument("--repeats", type=int, default=5)
    benchp.add_argument("--warmup", type=int, default=2)
    benchp.set_defaults(func=_cmd_bench)

    scaling = sub.add_parser("scaling", help="sweep one dimension and fit the scaling exponent")
    scaling.add_argument("--method", choices=_METHOD_NAMES, required=True)
    scaling.add_argument("--fix", type=_parse_fix, required=True, metavar="n=SIZE|m=SIZE")
    scaling.add_argument("--vary", type=_parse_vary, required=True, metavar="n|m=START:STOP:COUNT")
    scaling.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    scaling.add_argument("--seed", type=int, default=0)
    scaling.add_argument("--repeats", type=int, default=5)
    scaling.add_argument("--warmup", type=int, default=2)
    scaling.set_defaults(func=_cmd_scaling)

    check = sub.add_parser("check", help="cross-validate all methods against the dense oracle")
    _add_problem_flags(check, with_kind=False)
    check.add_argument("--tol", type=float, default=1e-7,
                       help="relative error allowed against the oracle")
    check.set_defaults(func=_cmd_check)

    return parser


def _cmd_gen(args) -> int:
    problem = generate_problem(args.seed, args.n, args.m, args.lam, args.kind)
    paths = [args.out + ".S.fmat", args.out + ".v.fmat"]
    fmat.write_matrix(paths[0], problem.system.S.data)
    fmat.write_vector(paths[1], problem.system.v)
    if problem.f is not None:
        paths.append(args.out + ".f.fmat")
        fmat.write_vector(paths[2], problem.f)
    print(f"wrote {', '.join(paths)} ({args.n}x{args.m} {args.kind}, seed {args.seed})")
    return 0


def _cmd_solve(args) -> int:
    S = ScoreMatrix(fmat.read_matrix(args.scores))
    rhs = fmat.read_vector(args.rhs)
    method = Method(args.method)
    if method is Method.RVB:
        sol = solve_rvb(S, args.lam, rhs)
    else:
        system = DampedSystem(S, args.lam, rhs)
        sol = resolve_solver(
            system, method, Variant(args.variant), tol=args.tol, max_iter=args.max_iter
        )()
    if args.out is not None:
        fmat.write_vector(args.out, sol.x)
    tail = "" if sol.iterations is None else f" iterations={sol.iterations}"
    if not sol.converged:
        tail += " not-converged"
    print(
        f"method={method.value} n={S.n} m={S.m} lambda={args.lam!r} "
        f"rel_residual={sol.rel_residual:.3e} wall_s={sol.wall_seconds:.6f}{tail}"
    )
    return 0 if sol.converged else 1


def _cmd_bench(args) -> int:
    problem = generate_problem(args.seed, args.n, args.m, args.lam, args.kind)
    record = time_method(
        problem.system,
        Method(args.method),
        warmup=args.warmup,
        repeats=args.repeats,
        seed=args.seed,
        variant=Variant(args.variant),
        f=problem.f,
        tol=args.tol,
        max_iter=args.max_iter,
    )
    print(CSV_HEADER)
    print(csv_row(record))
    return 0 if record.status == "ok" else 1


def _cmd_scaling(args) -> int:
    fix_name, fix_size = args.fix
    vary_name, sizes = args.vary
    if fix_name == vary_name:
        raise ValueError(f"--fix and --vary target the same dimension {fix_name!r}")
    records = []
    print(CSV_HEADER)
    for size in sizes:
        n = size if vary_name == "n" else fix_size
        m = size if vary_name == "m" else fix_size
        problem = generate_problem(args.seed, n, m, args.lam)
        record = time_method(
            problem.system,
            Method(args.method),
            warmup=args.warmup,
            repeats=args.repeats,
            seed=args.seed,
        )
        print(csv_row(record))
        records.append(record)
    axis = Axis.VARY_N if vary_name == "n" else Axis.VARY_M
    fit = fit_scaling(records, axis)
    print(
        f"# scaling {vary_name} in [{sizes[0]}, {sizes[-1]}] at {fix_name}={fix_size}: "
        f"exponent={fit.exponent:.3f} r_squared={fit.r_squared:.4f}"
    )
    return 0


def _relative_error(x, ref) -> float:
    return float(np.linalg.norm(x - ref) / max(1.0, np.linalg.norm(ref)))


def _cmd_check(args) -> int:
    tol = args.tol
    failures = 0

    def report(label, err):
        nonlocal failures
        ok = err <= tol
        failures += 0 if ok else 1
        print(f"{'ok  ' if ok else 'FAIL'} {label}: relative error {err:.3e}")

    real = generate_problem(args.seed, args.n, args.m, args.lam).system
    oracle = solve_naive(real)
    report("chol vs naive", _relative_error(solve_chol(real).x, oracle.x))
    report("eigh vs naive", _relative_error(solve_svd_eigh(real).x, oracle.x))
    report("svd vs naive", _relative_error(solve_svd_direct(real).x, oracle.x))
    cg = solve_cg(real, tol=1e-12, max_iter=5 * real.m)
    report("cg vs naive", _relative_error(cg.x, oracle.x))

    structured = generate_problem(args.seed, args.n, args.m, args.lam, Kind.STRUCTURED)
    x_rvb = solve_rvb(structured.system.S, structured.system.lam, structured.f).x
    x_chol = solve_chol(structured.system).x
    report("rvb vs chol (structured)", _relative_error(x_rvb, x_chol))

    cplx = generate_problem(args.seed, args.n, args.m, args.lam, Kind.COMPLEX_GAUSSIAN).system
    herm_oracle = solve_naive(cplx, variant=Variant.HERMITIAN)
    report(
        "hermitian chol vs naive",
        _relative_error(solve_chol_hermitian(cplx).x, herm_oracle.x),
    )
    real_rhs = DampedSystem(cplx.S, cplx.lam, cplx.v.real)
    rp_oracle = solve_naive(real_rhs, variant=Variant.REALPART)
    report(
        "realpart chol vs naive",
        _relative_error(solve_realpart(real_rhs).x, rp_oracle.x),
    )

    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 1


def _thread_limit() -> int | None:
    raw = os.environ.get("FISHER_SOLVE_THREADS", "").strip()
    if not raw:
        return None
    limit = int(raw)
    if limit < 0:
        raise ValueError(f"FISHER_SOLVE_THREADS must be >= 0, got {limit}")
    return limit or None  # 0 means automatic


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already wrote usage to stderr
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        limit = _thread_limit()
        if limit is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=limit):
                return args.func(args)
        return args.func(args)
    except (ValueError, OSError, FactorizationError) as exc:
        print(f"fisher-solve: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
