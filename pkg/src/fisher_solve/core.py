"""Core types for the damped Fisher system and shared verification primitives.

The central object is the linear system ``(S^T S + lam*I) x = v`` where the
score matrix ``S`` has many more columns (parameters) than rows (samples).
Everything here is pure and operates on immutable inputs; the m-by-m operator
is never materialized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

EPS = float(np.finfo(np.float64).eps)

_REAL = np.float64
_COMPLEX = np.complex128


class ScalarKind(enum.Enum):
    REAL64 = "real64"
    COMPLEX128 = "complex128"


class Method(enum.Enum):
    """Solution methods. Values double as CLI names and CSV tags."""

    CHOL = "chol"
    SVD_EIGH = "eigh"
    SVD_DIRECT = "svd"
    NAIVE = "naive"
    RVB = "rvb"
    CG = "cg"


class Variant(enum.Enum):
    """Which damped operator a solve targets.

    PLAIN is ``S^T S + lam*I`` (real scores), HERMITIAN is ``S^H S + lam*I``
    (complex scores), REALPART is ``Re[S^H S] + lam*I`` (complex scores,
    real right-hand side).
    """

    PLAIN = "plain"
    HERMITIAN = "hermitian"
    REALPART = "realpart"


class FactorizationError(RuntimeError):
    """A matrix factorization broke down numerically.

    For Cholesky failures ``pivot`` is the 0-based index of the leading minor
    that was not positive definite; callers may retry with a larger damping.
    """

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class WorkspaceMeter:
    """Integer bookkeeping of scalar slots a solver allocates.

    Pass an instance to a solver to record its transient memory footprint;
    ``peak_slots`` is the high-water mark in scalars (multiply by the scalar
    width for bytes). Single-use per solve, not shareable mid-solve.
    """

    __slots__ = ("current_slots", "peak_slots")

    def __init__(self):
        self.current_slots = 0
        self.peak_slots = 0

    def alloc(self, slots: int) -> None:
        self.current_slots += int(slots)
        if self.current_slots > self.peak_slots:
            self.peak_slots = self.current_slots

    def free(self, slots: int) -> None:
        self.current_slots -= int(slots)

    def peak_bytes(self, itemsize: int = 8) -> int:
        return self.peak_slots * int(itemsize)


def _alloc(meter: WorkspaceMeter | None, slots: int) -> None:
    if meter is not None:
        meter.alloc(slots)


def _free(meter: WorkspaceMeter | None, slots: int) -> None:
    if meter is not None:
        meter.free(slots)


def _coerce_damping(lam) -> float:
    if isinstance(lam, bool) or not isinstance(lam, (int, float, np.integer, np.floating)):
        raise ValueError(f"damping must be a real scalar, got {type(lam).__name__}")
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"damping must be finite and > 0, got {lam}")
    return lam


def _coerce_array(a, name: str) -> np.ndarray:
    """Coerce to a C-contiguous float64/complex128 array and validate finiteness."""
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        arr = np.ascontiguousarray(arr, dtype=_COMPLEX)
    elif np.issubdtype(arr.dtype, np.number) or arr.dtype == np.bool_:
        arr = np.ascontiguousarray(arr, dtype=_REAL)
    else:
        raise ValueError(f"{name} must be numeric, got dtype {arr.dtype}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite entries")
    return arr


@dataclass(frozen=True)
class ScoreMatrix:
    """Dense n-by-m score matrix, one sample per row, real or complex 64-bit.

    Row-major storage keeps the S S^T contraction over the long (m) axis at
    unit stride. The array is made read-only on construction.
    """

    data: np.ndarray

    def __post_init__(self):
        src = self.data
        arr = _coerce_array(src, "score matrix")
        if arr.ndim != 2:
            raise ValueError(f"score matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"score matrix needs at least one row and column, got {arr.shape}")
        if isinstance(src, np.ndarray) and np.shares_memory(arr, src):
            arr = arr.copy()  # freezing must not leak back into the caller's array
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def is_complex(self) -> bool:
        return self.data.dtype == _COMPLEX

    @property
    def scalar_kind(self) -> ScalarKind:
        return ScalarKind.COMPLEX128 if self.is_complex else ScalarKind.REAL64


@dataclass(frozen=True)
class DampedSystem:
    """The system ``(S^T S + lam*I) x = v`` (transposes become Hermitian
    conjugates for complex S).

    ``lam`` must be strictly positive: the solvers divide by it and positive
    definiteness of the small Gram matrix depends on it. ``v`` may be real
    even when S is complex (required by the real-part variant).
    """

    S: ScoreMatrix
    lam: float
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", _coerce_damping(self.lam))

        src = self.v
        v = _coerce_array(src, "right-hand side")
        if v.ndim != 1:
            raise ValueError(f"right-hand side must be 1-D, got shape {v.shape}")
        if v.shape[0] != self.S.m:
            raise ValueError(
                f"right-hand side length {v.shape[0]} does not match parameter count {self.S.m}"
            )
        if not self.S.is_complex and v.dtype == _COMPLEX:
            raise ValueError("real score matrix with complex right-hand side")
        if isinstance(src, np.ndarray) and np.shares_memory(v, src):
            v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.S.n

    @property
    def m(self) -> int:
        return self.S.m


@dataclass(frozen=True)
class Solution:
    """Solution vector plus diagnostics.

    ``abs_residual``/``rel_residual`` are always recomputed through
    :func:`residual` with the solve's own operator variant, so re-running
    ``residual`` on identical inputs reproduces them bit for bit.
    ``iterations`` is populated by the conjugate-gradient solver only;
    ``converged`` is False when CG hit its iteration cap.
    """

    x: np.ndarray
    method: Method
    abs_residual: float
    rel_residual: float
    wall_seconds: float
    iterations: int | None = None
    converged: bool = True


@dataclass(frozen=True)
class ThinSvd:
    """Thin SVD factors of a score matrix: S = U diag(sigma) V^H.

    U is n-by-r and V is m-by-r with orthonormal columns; sigma is strictly
    positive and nonincreasing. r = 0 (empty factors) is valid and means the
    matrix was numerically zero.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U, sigma, V = self.U, self.sigma, self.V
        if U.ndim != 2 or V.ndim != 2 or sigma.ndim != 1:
            raise ValueError("thin SVD factors have wrong ranks")
        r = sigma.shape[0]
        if U.shape[1] != r or V.shape[1] != r:
            raise ValueError(
                f"inconsistent retained rank: U has {U.shape[1]} columns, "
                f"V has {V.shape[1]}, sigma has {r}"
            )
        if r > min(U.shape[0], V.shape[0]):
            raise ValueError("retained rank exceeds min(n, m)")
        if r > 0:
            if not np.all(sigma > 0.0):
                raise ValueError("singular values must be strictly positive")
            if np.any(np.diff(sigma) > 0.0):
                raise ValueError("singular values must be nonincreasing")

    @property
    def r(self) -> int:
        return self.sigma.shape[0]

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def m(self) -> int:
        return self.V.shape[0]


def gram(S: ScoreMatrix, lam: float, meter: WorkspaceMeter | None = None) -> np.ndarray:
    """Damped Gram matrix W = S S^T + lam*I (S S^H for complex S), n-by-n.

    The product is explicitly symmetrized before the diagonal shift so that
    round-off asymmetry cannot trip a downstream Cholesky factorization.
    """
    lam = _coerce_damping(lam)
    A = S.data
    n = S.n
    if S.is_complex:
        _alloc(meter, S.n * S.m)  # conjugate copy; numpy cannot fuse conj into matmul
        W = A @ A.conj().T
        _free(meter, S.n * S.m)
    else:
        W = A @ A.T
    _alloc(meter, n * n)
    _alloc(meter, n * n)
    W = 0.5 * (W + W.conj().T)
    _free(meter, n * n)
    W[np.diag_indices(n)] += lam
    return W


def _apply_operator(S: ScoreMatrix, lam: float, x: np.ndarray, variant: Variant) -> np.ndarray:
    """Evaluate (S^T S + lam*I) x (or a variant) without forming the m-by-m matrix."""
    A = S.data
    if variant is Variant.PLAIN:
        return (A @ x) @ A + lam * x
    if variant is Variant.HERMITIAN:
        # A^H t computed as conj(conj(t) @ A) to avoid an n-by-m conjugate copy
        t = A @ x
        return np.conj(np.conj(t) @ A) + lam * x
    re = A.real
    im = A.imag
    return (re @ x) @ re + (im @ x) @ im + lam * x


def residual(system: DampedSystem, x, variant: Variant = Variant.PLAIN) -> tuple[float, float]:
    """Absolute and relative residual of x for the system under a variant.

    Returns ``(||A x - v||_2, abs / max(||v||_2, eps))`` with A evaluated
    matrix-free as ``S^T (S x) + lam*x`` (transposes per variant). Pure: two
    calls on identical inputs return bit-identical values.
    """
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != system.m:
        raise ValueError(f"solution vector has shape {x.shape}, expected ({system.m},)")
    if not isinstance(variant, Variant):
        raise ValueError(f"unknown operator variant: {variant!r}")
    r = _apply_operator(system.S, system.lam, x, variant) - system.v
    abs_res = float(np.linalg.norm(r))
    rel_res = abs_res / max(float(np.linalg.norm(system.v)), EPS)
    return abs_res, rel_res
