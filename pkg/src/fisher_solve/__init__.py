"""fisher-solve: fast solves of (S^T S + lambda I) x = v when parameters vastly outnumber samples.

The production path factors the small n-by-n Gram matrix with Cholesky and
applies it with triangular solves, at O(n^3 + n^2 m) time and O(nm) memory.
SVD-based and conjugate-gradient baselines, stochastic-reconfiguration
adapters for complex scores, and a timing harness round out the package.
"""

from .bench import (
    CSV_HEADER,
    Axis,
    BenchRecord,
    Kind,
    Problem,
    ScalingFit,
    csv_row,
    fit_scaling,
    generate_problem,
    resolve_solver,
    time_method,
)
from .core import (
    EPS,
    DampedSystem,
    FactorizationError,
    Method,
    ScalarKind,
    ScoreMatrix,
    Solution,
    ThinSvd,
    Variant,
    WorkspaceMeter,
    gram,
    residual,
)
from .fmat import FmatError, read_matrix, read_vector, write_matrix, write_vector
from .solvers import (
    DEFAULT_NAIVE_CAP,
    DEFAULT_SIGMA_FLOOR,
    CholWorkspace,
    solve_cg,
    solve_chol,
    solve_chol_hermitian,
    solve_naive,
    solve_realpart,
    solve_rvb,
    solve_svd_direct,
    solve_svd_eigh,
    solve_svd_from_factors,
    thin_svd_direct,
    thin_svd_eigh,
)
from .sr import RawScores, center_scores, concat_real_imag

__version__ = "0.1.0"
