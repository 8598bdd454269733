"""Solution methods for the damped Fisher system.

Six routes to the same x. ``solve_chol`` is the production path: it factors
the small n-by-n Gram matrix ``S S^T + lam*I`` and applies its inverse with
two triangular solves, so the cost is O(n^3 + n^2 m) and the m-by-m operator
(and the n-by-m intermediate ``L^{-1} S``) are never formed. The SVD routes
and unpreconditioned CG are baselines; ``solve_naive`` is the dense m-by-m
oracle used only for verification.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from time import perf_counter

import numpy as np
from scipy.linalg import get_lapack_funcs, solve_triangular
import scipy.linalg

from .core import (
    EPS,
    DampedSystem,
    FactorizationError,
    Method,
    ScoreMatrix,
    Solution,
    ThinSvd,
    Variant,
    WorkspaceMeter,
    _apply_operator,
    _coerce_array,
    _coerce_damping,
    gram,
    residual,
)
from .sr import concat_real_imag

DEFAULT_NAIVE_CAP = 4096
DEFAULT_SIGMA_FLOOR = 1e-12

# the factored route promises rel_residual <= 1e-8; refine only when the first
# pass is not already two decades inside that
_REFINE_ABOVE_REL = 1e-10


def _track(meter: WorkspaceMeter | None, arr: np.ndarray) -> np.ndarray:
    if meter is not None:
        meter.alloc(arr.size)
    return arr


def _drop(meter: WorkspaceMeter | None, arr: np.ndarray) -> None:
    if meter is not None:
        meter.free(arr.size)


@dataclass(frozen=True)
class CholWorkspace:
    """Lower Cholesky factor of the damped Gram matrix, reusable across right-hand sides."""

    L: np.ndarray

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def solve_gram(self, b: np.ndarray) -> np.ndarray:
        """Solve (L L^H) y = b by forward then back substitution."""
        trans = "C" if np.iscomplexobj(self.L) else "T"
        t = solve_triangular(self.L, b, lower=True, trans="N", check_finite=False)
        return solve_triangular(self.L, t, lower=True, trans=trans, check_finite=False)


def _cholesky_lower(W: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a Hermitian positive-definite matrix.

    Raises FactorizationError carrying the 0-based pivot index when W is not
    numerically positive definite.
    """
    potrf, = get_lapack_funcs(("potrf",), (W,))
    L, info = potrf(W, lower=1, clean=1)
    if info > 0:
        raise FactorizationError(
            f"Gram matrix is not positive definite at pivot {info - 1}; "
            "retry with a larger damping",
            pivot=info - 1,
        )
    if info < 0:
        raise ValueError(f"invalid argument {-info} to LAPACK potrf")
    return L


def _factor_gram(S: ScoreMatrix, lam: float, meter: WorkspaceMeter | None) -> CholWorkspace:
    W = gram(S, lam, meter)
    _track(meter, W)  # potrf copies into a fresh Fortran-order factor
    L = _cholesky_lower(W)
    _drop(meter, W)
    return CholWorkspace(L)


def _chol_apply(
    A: np.ndarray,
    lam: float,
    ws: CholWorkspace,
    b: np.ndarray,
    meter: WorkspaceMeter | None,
) -> np.ndarray:
    """One pass of x = (b - S^H L^{-H} L^{-1} S b) / lam, right to left."""
    hermitian = np.iscomplexobj(A)
    t1 = _track(meter, A @ b)
    t2 = _track(meter, solve_triangular(ws.L, t1, lower=True, trans="N", check_finite=False))
    _drop(meter, t1)
    trans = "C" if hermitian else "T"
    t3 = _track(meter, solve_triangular(ws.L, t2, lower=True, trans=trans, check_finite=False))
    _drop(meter, t2)
    if hermitian:
        tc = _track(meter, np.conj(t3))
        w = _track(meter, tc @ A)
        _drop(meter, tc)
        np.conjugate(w, out=w)
    else:
        w = _track(meter, t3 @ A)
    _drop(meter, t3)
    x = _track(meter, b - w)
    _drop(meter, w)
    x /= lam
    return x


def _finish(
    system: DampedSystem,
    x: np.ndarray,
    method: Method,
    variant: Variant,
    t0: float,
    iterations: int | None = None,
    converged: bool = True,
) -> Solution:
    abs_res, rel_res = residual(system, x, variant)
    return Solution(
        x=x,
        method=method,
        abs_residual=abs_res,
        rel_residual=rel_res,
        wall_seconds=perf_counter() - t0,
        iterations=iterations,
        converged=converged,
    )


def _solve_chol_impl(
    system: DampedSystem, variant: Variant, meter: WorkspaceMeter | None
) -> Solution:
    t0 = perf_counter()
    S, lam, v = system.S, system.lam, system.v
    A = S.data
    ws = _factor_gram(S, lam, meter)
    _track(meter, ws.L)
    x = _chol_apply(A, lam, ws, v, meter)
    # Defect of the first pass, built with the exact expression residual() uses
    # so the early exit can store bit-identical diagnostics.
    if meter is not None:
        meter.alloc(S.n + 2 * S.m)  # transients inside the operator application
    r = _apply_operator(S, lam, x, variant)
    if meter is not None:
        meter.free(S.n + 2 * S.m)
    _track(meter, r)
    np.subtract(r, v, out=r)
    abs_res = float(np.linalg.norm(r))
    rel_res = abs_res / max(float(np.linalg.norm(v)), EPS)
    if rel_res <= _REFINE_ABOVE_REL:
        _drop(meter, r)
        _drop(meter, ws.L)
        sol = Solution(
            x=x,
            method=Method.CHOL,
            abs_residual=abs_res,
            rel_residual=rel_res,
            wall_seconds=perf_counter() - t0,
        )
        _drop(meter, x)
        return sol
    # One correction pass with the same factors: the bare formula leaves a
    # residual of order eps*sigma_max^2/lam, which at small damping overshoots
    # the promised 1e-8; re-solving for the defect squares it away at O(nm) cost.
    np.negative(r, out=r)
    d = _chol_apply(A, lam, ws, r, meter)
    x += d
    _drop(meter, d)
    _drop(meter, r)
    _drop(meter, ws.L)
    sol = _finish(system, x, Method.CHOL, variant, t0)
    _drop(meter, x)
    return sol


def solve_chol(system: DampedSystem, meter: WorkspaceMeter | None = None) -> Solution:
    """Solve (S^T S + lam*I) x = v through the n-by-n Gram factorization.

    Peak extra memory is O(n^2 + n + m): the n-by-m triangular-solve
    intermediate is folded into matrix-vector products and never materialized.
    Pass a WorkspaceMeter to record the allocation high-water mark.
    """
    if system.S.is_complex:
        raise ValueError("solve_chol handles real scores; use solve_chol_hermitian")
    return _solve_chol_impl(system, Variant.PLAIN, meter)


def solve_chol_hermitian(system: DampedSystem, meter: WorkspaceMeter | None = None) -> Solution:
    """Same factorization route for complex scores: solves (S^H S + lam*I) x = v."""
    if not system.S.is_complex:
        raise ValueError("solve_chol_hermitian expects complex scores; use solve_chol")
    return _solve_chol_impl(system, Variant.HERMITIAN, meter)


def solve_realpart(system: DampedSystem, meter: WorkspaceMeter | None = None) -> Solution:
    """Solve (Re[S^H S] + lam*I) x = v for complex scores and a real right-hand side.

    Stacks Re(S) over Im(S) into a real 2n-by-m matrix C, for which
    C^T C = Re[S^H S] exactly, and runs the plain Cholesky route on C. The
    sample dimension doubles, so the cost is O((2n)^2 m).
    """
    if not system.S.is_complex:
        raise ValueError("real-part variant expects complex scores")
    if np.iscomplexobj(system.v):
        raise ValueError("real-part variant requires a real right-hand side")
    t0 = perf_counter()
    C = concat_real_imag(system.S)
    _track(meter, C.data)
    stacked = DampedSystem(C, system.lam, system.v)
    inner = _solve_chol_impl(stacked, Variant.PLAIN, meter)
    _drop(meter, C.data)
    abs_res, rel_res = residual(system, inner.x, Variant.REALPART)
    return Solution(
        x=inner.x,
        method=Method.CHOL,
        abs_residual=abs_res,
        rel_residual=rel_res,
        wall_seconds=perf_counter() - t0,
    )


def thin_svd_eigh(S: ScoreMatrix, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> ThinSvd:
    """Thin SVD via the eigendecomposition of the n-by-n Gram matrix S S^H.

    Requires n <= m (the wide regime this library targets). Eigenvalues made
    negative by round-off are clamped to zero, and singular values at or below
    ``sigma_floor * sigma_max`` are truncated; the right factor is recovered
    column-wise as V_i = S^H u_i / sigma_i, which divides by sigma and is the
    reason for the floor. A numerically zero matrix yields empty rank-0 factors.
    """
    sigma_floor = float(sigma_floor)
    if not np.isfinite(sigma_floor) or sigma_floor < 0.0:
        raise ValueError(f"sigma_floor must be finite and >= 0, got {sigma_floor}")
    if S.n > S.m:
        raise ValueError(f"thin_svd_eigh requires n <= m, got shape {S.shape}")
    A = S.data
    G = A @ A.conj().T
    G = 0.5 * (G + G.conj().T)
    try:
        evals, U = np.linalg.eigh(G)  # ascending
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"eigendecomposition did not converge: {exc}") from exc
    evals = evals[::-1]
    U = U[:, ::-1]
    sigma = np.sqrt(np.clip(evals, 0.0, None))
    keep = sigma > sigma_floor * sigma[0]
    U = np.ascontiguousarray(U[:, keep])
    sigma = np.ascontiguousarray(sigma[keep])
    if sigma.size == 0:
        return ThinSvd(U=U, sigma=sigma, V=np.zeros((S.m, 0), dtype=A.dtype))
    B = U / sigma
    if S.is_complex:
        V = (B.conj().T @ A).conj().T
    else:
        V = A.T @ B
    return ThinSvd(U=U, sigma=sigma, V=V)


def thin_svd_direct(S: ScoreMatrix) -> ThinSvd:
    """Thin SVD through a general dense routine; exact-zero singular values are dropped."""
    try:
        U, s, Vh = np.linalg.svd(S.data, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"SVD did not converge: {exc}") from exc
    keep = s > 0.0
    U = np.ascontiguousarray(U[:, keep])
    s = np.ascontiguousarray(s[keep])
    Vh = Vh[keep]
    V = Vh.conj().T if np.iscomplexobj(Vh) else Vh.T
    return ThinSvd(U=U, sigma=s, V=V)


def solve_svd_from_factors(
    svd: ThinSvd,
    lam: float,
    v,
    *,
    source: ScoreMatrix | None = None,
    method: Method = Method.SVD_EIGH,
) -> Solution:
    """Solve the damped system from thin SVD factors of S.

    Computes ``x = V (sigma^2 + lam)^{-1} V^H v + (v - V V^H v) / lam`` with V
    applied right to left, so the m-by-m projector V V^H never exists. With
    rank-0 factors this degenerates to ``x = v / lam``.

    When ``source`` (the matrix the factors came from) is given, the reported
    residuals are recomputed against it via :func:`residual`; otherwise they
    are measured against the operator the factors span.
    """
    lam = _coerce_damping(lam)
    v = _coerce_array(v, "right-hand side")
    if v.ndim != 1 or v.shape[0] != svd.m:
        raise ValueError(f"right-hand side has shape {v.shape}, expected ({svd.m},)")
    t0 = perf_counter()
    V, sigma = svd.V, svd.sigma
    if svd.r == 0:
        x = v / lam
        t = None
    else:
        if np.iscomplexobj(V):
            t = np.conj(np.conj(v) @ V)  # V^H v without conjugating the m-by-r factor
        else:
            t = v @ V
        x = V @ (t / (sigma**2 + lam)) + (v - V @ t) / lam
    if source is not None:
        system = DampedSystem(source, lam, v)
        variant = Variant.HERMITIAN if source.is_complex else Variant.PLAIN
        return _finish(system, x, method, variant, t0)
    if svd.r == 0:
        y = lam * x
    else:
        tx = np.conj(np.conj(x) @ V) if np.iscomplexobj(V) else x @ V
        y = V @ (sigma**2 * tx) + lam * x
    abs_res = float(np.linalg.norm(y - v))
    rel_res = abs_res / max(float(np.linalg.norm(v)), EPS)
    return Solution(
        x=x,
        method=method,
        abs_residual=abs_res,
        rel_residual=rel_res,
        wall_seconds=perf_counter() - t0,
    )


def solve_svd_eigh(system: DampedSystem, sigma_floor: float = DEFAULT_SIGMA_FLOOR) -> Solution:
    """Factor with thin_svd_eigh, then solve; the timed unit for the eigh baseline."""
    t0 = perf_counter()
    svd = thin_svd_eigh(system.S, sigma_floor)
    sol = solve_svd_from_factors(
        svd, system.lam, system.v, source=system.S, method=Method.SVD_EIGH
    )
    return replace(sol, wall_seconds=perf_counter() - t0)


def solve_svd_direct(system: DampedSystem) -> Solution:
    """Factor with thin_svd_direct, then solve; the timed unit for the dense-SVD baseline."""
    t0 = perf_counter()
    svd = thin_svd_direct(system.S)
    sol = solve_svd_from_factors(
        svd, system.lam, system.v, source=system.S, method=Method.SVD_DIRECT
    )
    return replace(sol, wall_seconds=perf_counter() - t0)


def solve_naive(
    system: DampedSystem,
    variant: Variant = Variant.PLAIN,
    cap: int = DEFAULT_NAIVE_CAP,
) -> Solution:
    """Ground-truth oracle: forms the dense m-by-m operator and solves it directly.

    O(m^3) time and O(m^2) memory, so m is capped (default 4096) to guard
    against misuse; this is a verification tool, not a production path.
    """
    m = system.m
    if m > cap:
        raise ValueError(f"naive oracle refused: m={m} exceeds the cap of {cap}")
    t0 = perf_counter()
    A = system.S.data
    if variant is Variant.PLAIN:
        if system.S.is_complex:
            raise ValueError("plain variant needs real scores; use the hermitian variant")
        dense = A.T @ A
    elif variant is Variant.HERMITIAN:
        dense = A.conj().T @ A
    elif variant is Variant.REALPART:
        if np.iscomplexobj(system.v):
            raise ValueError("real-part variant requires a real right-hand side")
        if system.S.is_complex:
            re, im = A.real, A.imag
            dense = re.T @ re + im.T @ im
        else:
            dense = A.T @ A
    else:
        raise ValueError(f"unknown operator variant: {variant!r}")
    dense = 0.5 * (dense + dense.conj().T)
    dense[np.diag_indices(m)] += system.lam
    try:
        x = scipy.linalg.solve(dense, system.v, assume_a="pos", check_finite=False)
    except np.linalg.LinAlgError as exc:  # possible only via catastrophic round-off
        raise FactorizationError(f"dense symmetric solve failed: {exc}") from exc
    return _finish(system, x, Method.NAIVE, variant, t0)


def solve_rvb(
    S: ScoreMatrix, lam: float, f, meter: WorkspaceMeter | None = None
) -> Solution:
    """Least-squares-structured solve x = S^T (S S^T + lam*I)^{-1} f.

    ``f`` is the length-n coefficient vector of a right-hand side with the
    structure v = S^T f; the returned diagnostics are measured against that
    implied v. Reuses the Gram matrix and its Cholesky factorization.
    """
    lam = _coerce_damping(lam)
    f = _coerce_array(f, "coefficient vector")
    if f.ndim != 1 or f.shape[0] != S.n:
        raise ValueError(f"coefficient vector has shape {f.shape}, expected ({S.n},)")
    if not S.is_complex and f.dtype.kind == "c":
        raise ValueError("real score matrix with complex coefficient vector")
    t0 = perf_counter()
    A = S.data
    if S.is_complex:
        f = f.astype(np.complex128, copy=False)
        v = np.conj(np.conj(f) @ A)
    else:
        v = f @ A
    ws = _factor_gram(S, lam, meter)
    _track(meter, ws.L)
    y = _track(meter, ws.solve_gram(f))
    if S.is_complex:
        x = np.conj(np.conj(y) @ A)
    else:
        x = y @ A
    _drop(meter, y)
    _drop(meter, ws.L)
    system = DampedSystem(S, lam, v)
    variant = Variant.HERMITIAN if S.is_complex else Variant.PLAIN
    return _finish(system, x, Method.RVB, variant, t0)


def solve_cg(system: DampedSystem, tol: float = 1e-10, max_iter: int | None = None) -> Solution:
    """Unpreconditioned conjugate gradient on the matrix-free damped operator.

    Stops when the recurrence residual satisfies ||r|| <= tol * max(||v||, eps)
    or after ``max_iter`` steps (default m), in which case the best iterate is
    returned with ``converged=False`` rather than raising: baseline comparisons
    need the partial result. ``iterations`` counts completed CG steps.
    """
    tol = float(tol)
    if not np.isfinite(tol) or tol <= 0.0:
        raise ValueError(f"tolerance must be finite and > 0, got {tol}")
    if max_iter is None:
        max_iter = system.m
    max_iter = int(max_iter)
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    t0 = perf_counter()
    S, lam, v = system.S, system.lam, system.v
    variant = Variant.HERMITIAN if S.is_complex else Variant.PLAIN
    dtype = np.complex128 if S.is_complex or np.iscomplexobj(v) else np.float64
    x = np.zeros(system.m, dtype=dtype)
    r = v.astype(dtype)
    threshold = tol * max(float(np.linalg.norm(v)), EPS)
    rs = float(np.vdot(r, r).real)
    iterations = 0
    converged = np.sqrt(rs) <= threshold
    if not converged:
        p = r.copy()
        while iterations < max_iter:
            Ap = _apply_operator(S, lam, p, variant)
            denom = float(np.vdot(p, Ap).real)
            if denom <= 0.0:  # impossible for a PD operator short of round-off breakdown
                break
            alpha = rs / denom
            x += alpha * p
            r -= alpha * Ap
            rs_new = float(np.vdot(r, r).real)
            iterations += 1
            if np.sqrt(rs_new) <= threshold:
                converged = True
                break
            p = r + (rs_new / rs) * p
            rs = rs_new
    return _finish(system, x, Method.CG, variant, t0, iterations=iterations, converged=converged)
