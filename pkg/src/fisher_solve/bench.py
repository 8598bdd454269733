"""Benchmark harness: seeded problem generation, method timing, scaling fits.

Timing loops are single-threaded at the harness level (the solver under test
may parallelize internally); the median over repeats is the primary statistic
because it shrugs off scheduler noise. Records serialize to a fixed CSV schema
whose non-timing columns are byte-stable for fixed inputs.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .core import (
    DampedSystem,
    FactorizationError,
    Method,
    ScoreMatrix,
    Variant,
    _coerce_damping,
)
from .solvers import (
    DEFAULT_NAIVE_CAP,
    solve_cg,
    solve_chol,
    solve_chol_hermitian,
    solve_naive,
    solve_realpart,
    solve_rvb,
    solve_svd_direct,
    solve_svd_eigh,
)

CSV_HEADER = "method,n,m,lambda,seed,repeats,median_s,min_s,rel_residual,status"

REL_RESIDUAL_GATE = 1e-6  # looser than the solvers deliver; covers ill-conditioned draws

_MAX_PROBLEM_BYTES = 1 << 34  # refuse generation beyond 16 GiB of scores


class Kind(enum.Enum):
    """Problem families the generator can produce."""

    REAL_GAUSSIAN = "real"
    COMPLEX_GAUSSIAN = "complex"
    STRUCTURED = "structured"


class Axis(enum.Enum):
    VARY_N = "n"
    VARY_M = "m"


@dataclass(frozen=True)
class Problem:
    """A generated system plus, for structured problems, the coefficient vector f."""

    system: DampedSystem
    kind: Kind
    seed: int
    f: np.ndarray | None = None


@dataclass(frozen=True)
class BenchRecord:
    """One timed run of one method on one problem."""

    method: Method
    n: int
    m: int
    lam: float
    seed: int
    repeats: int
    median_seconds: float
    min_seconds: float
    rel_residual: float
    effective_n: int
    status: str

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if (
            np.isfinite(self.median_seconds)
            and np.isfinite(self.min_seconds)
            and self.min_seconds > self.median_seconds
        ):
            raise ValueError("min_seconds cannot exceed median_seconds")


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares slope of log(median_seconds) against log(size)."""

    axis: Axis
    exponent: float
    r_squared: float
    points: tuple[tuple[float, float], ...]


def _fmt(x: float) -> str:
    return f"{x:.9e}"


def csv_row(record: BenchRecord) -> str:
    """Serialize one record to the fixed CSV schema (header in CSV_HEADER)."""
    return ",".join(
        [
            record.method.value,
            str(record.n),
            str(record.m),
            repr(record.lam),
            str(record.seed),
            str(record.repeats),
            _fmt(record.median_seconds),
            _fmt(record.min_seconds),
            _fmt(record.rel_residual),
            record.status,
        ]
    )


def generate_problem(
    seed: int, n: int, m: int, lam: float, kind: Kind | str = Kind.REAL_GAUSSIAN
) -> Problem:
    """Deterministically generate a random damped system.

    The stream is PCG64 seeded with ``seed``; draw order is the score block
    first (row-major; complex kinds draw the full real block then the full
    imaginary block), then v (structured: f, from which v = S^T f). Identical
    arguments therefore yield bit-identical problems.

    Scores are i.i.d. standard normal scaled by 1/sqrt(n), matching the score
    matrix normalization the solvers expect.
    """
    n = int(n)
    m = int(m)
    if n < 1 or m < 1:
        raise ValueError(f"problem needs n >= 1 and m >= 1, got {n}x{m}")
    lam = _coerce_damping(lam)
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    kind = Kind(kind)
    itemsize = 16 if kind is Kind.COMPLEX_GAUSSIAN else 8
    if n * m * itemsize > _MAX_PROBLEM_BYTES:
        raise ValueError(
            f"refusing to generate a {n}x{m} problem: "
            f"{n * m * itemsize} bytes of scores exceeds the {_MAX_PROBLEM_BYTES} byte limit"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    root_n = np.sqrt(float(n))
    f = None
    if kind is Kind.REAL_GAUSSIAN:
        S = ScoreMatrix(rng.standard_normal((n, m)) / root_n)
        v = rng.standard_normal(m)
    elif kind is Kind.COMPLEX_GAUSSIAN:
        re = rng.standard_normal((n, m))
        im = rng.standard_normal((n, m))
        S = ScoreMatrix((re + 1j * im) / root_n)
        v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    else:
        S = ScoreMatrix(rng.standard_normal((n, m)) / root_n)
        f = rng.standard_normal(n)
        f.flags.writeable = False
        v = f @ S.data
    return Problem(system=DampedSystem(S, lam, v), kind=kind, seed=seed, f=f)


_sink = 0.0


def _consume(solution) -> None:
    """Black-box sink: touch the result so no layer can elide the solve."""
    global _sink
    _sink += float(abs(solution.x[0]))


def resolve_solver(system, method, variant=Variant.PLAIN, f=None, tol=1e-10,
                   max_iter=None, naive_cap=DEFAULT_NAIVE_CAP):
    """Map (method, variant, scalar kind) to a zero-argument solve callable.

    Raises ValueError on method/kind mismatches, e.g. the hermitian variant on
    real scores or the naive oracle above its cap.
    """
    is_complex = system.S.is_complex
    if method is Method.CHOL:
        if variant is Variant.PLAIN:
            if is_complex:
                raise ValueError("plain chol needs real scores; pick hermitian or realpart")
            return lambda: solve_chol(system)
        if variant is Variant.HERMITIAN:
            if not is_complex:
                raise ValueError("hermitian variant needs complex scores")
            return lambda: solve_chol_hermitian(system)
        if not is_complex:
            raise ValueError("real-part variant needs complex scores")
        return lambda: solve_realpart(system)
    if method is Method.NAIVE:
        if system.m > naive_cap:
            raise ValueError(f"naive oracle refused: m={system.m} exceeds the cap of {naive_cap}")
        return lambda: solve_naive(system, variant=variant, cap=naive_cap)
    if variant is not Variant.PLAIN:
        raise ValueError(f"method {method.value} supports the plain variant only")
    if method is Method.SVD_EIGH:
        return lambda: solve_svd_eigh(system)
    if method is Method.SVD_DIRECT:
        return lambda: solve_svd_direct(system)
    if method is Method.CG:
        return lambda: solve_cg(system, tol=tol, max_iter=max_iter)
    if method is Method.RVB:
        if f is None:
            raise ValueError("rvb needs the coefficient vector f of a structured problem")
        return lambda: solve_rvb(system.S, system.lam, f)
    raise ValueError(f"unknown method: {method!r}")


def time_method(
    system: DampedSystem,
    method: Method | str,
    warmup: int = 2,
    repeats: int = 5,
    *,
    seed: int = 0,
    variant: Variant | str = Variant.PLAIN,
    f: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int | None = None,
    naive_cap: int = DEFAULT_NAIVE_CAP,
) -> BenchRecord:
    """Time one method on one system: warmup unmeasured solves, then measured repeats.

    Uses the monotonic performance clock; records the median and minimum and
    the verified relative residual of the last solve. Method/kind mismatches
    raise immediately; failures inside the solver mark the record ``failed``
    instead of raising, as do residuals above REL_RESIDUAL_GATE.

    ``seed`` is carried into the record for provenance only. ``f`` feeds the
    rvb method, ``tol``/``max_iter`` feed cg, ``variant`` picks the complex
    flavor of chol/naive.
    """
    method = Method(method)
    variant = Variant(variant)
    warmup = int(warmup)
    repeats = int(repeats)
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    runner = resolve_solver(system, method, variant, f, tol, max_iter, naive_cap)

    times = []
    last = None
    failed = False
    try:
        for _ in range(warmup):
            _consume(runner())
        for _ in range(repeats):
            t0 = perf_counter()
            sol = runner()
            times.append(perf_counter() - t0)
            _consume(sol)
            last = sol
    except FactorizationError:
        failed = True

    if failed or last is None:
        median_s = min_s = rel = float("nan")
        status = "failed"
    else:
        median_s = statistics.median(times)
        min_s = min(times)
        rel = last.rel_residual
        ok = last.converged and np.isfinite(rel) and rel <= REL_RESIDUAL_GATE
        status = "ok" if ok else "failed"
    effective_n = 2 * system.n if variant is Variant.REALPART else system.n
    return BenchRecord(
        method=method,
        n=system.n,
        m=system.m,
        lam=system.lam,
        seed=seed,
        repeats=repeats,
        median_seconds=median_s,
        min_seconds=min_s,
        rel_residual=rel,
        effective_n=effective_n,
        status=status,
    )


def fit_scaling(records, axis: Axis | str) -> ScalingFit:
    """Fit a power law through timing records that vary one dimension.

    Requires at least 3 successful records of the same method with the other
    dimension held fixed and sizes spanning at least a factor of 4; returns
    the log-log least-squares exponent and its r-squared.
    """
    axis = Axis(axis)
    recs = list(records)
    if len(recs) < 3:
        raise ValueError(f"need at least 3 records to fit, got {len(recs)}")
    if len({r.method for r in recs}) != 1:
        raise ValueError("records mix methods")
    if any(r.status != "ok" for r in recs):
        raise ValueError("cannot fit failed records")
    if axis is Axis.VARY_N:
        sizes = np.array([r.n for r in recs], dtype=np.float64)
        fixed = {r.m for r in recs}
    else:
        sizes = np.array([r.m for r in recs], dtype=np.float64)
        fixed = {r.n for r in recs}
    if len(fixed) != 1:
        raise ValueError(f"the fixed dimension varies across records: {sorted(fixed)}")
    if sizes.max() < 4.0 * sizes.min():
        raise ValueError(
            f"sizes span only {sizes.max() / sizes.min():.2f}x; need at least 4x for a fit"
        )
    meds = np.array([r.median_seconds for r in recs], dtype=np.float64)
    if not np.all(np.isfinite(meds)) or np.any(meds <= 0.0):
        raise ValueError("median timings must be positive and finite")
    x = np.log(sizes)
    y = np.log(meds)
    dx = x - x.mean()
    dy = y - y.mean()
    slope = float(dx @ dy / (dx @ dx))
    ss_res = float(np.sum((dy - slope * dx) ** 2))
    ss_tot = float(dy @ dy)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    points = tuple(sorted(zip(sizes.tolist(), meds.tolist())))
    return ScalingFit(axis=axis, exponent=slope, r_squared=r2, points=points)
