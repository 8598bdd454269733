"""Stochastic-reconfiguration adapters.

Raw per-sample log-derivatives O must be centered before they can act as the
score matrix (the wavefunction is unnormalized), and complex scores feed the
real-part variant through a real/imaginary row stack. Both operations are
pure functions from arrays to ScoreMatrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ScoreMatrix, _coerce_array


@dataclass(frozen=True)
class RawScores:
    """Per-sample derivatives of the log wavefunction, one sample per row.

    O[i, j] = d log psi(x_i) / d theta_j, real or complex, not yet centered.
    """

    O: np.ndarray

    def __post_init__(self):
        src = self.O
        arr = _coerce_array(src, "raw scores")
        if arr.ndim != 2:
            raise ValueError(f"raw scores must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"raw scores need at least one row and column, got {arr.shape}")
        if isinstance(src, np.ndarray) and np.shares_memory(arr, src):
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "O", arr)

    @property
    def n(self) -> int:
        return self.O.shape[0]

    @property
    def m(self) -> int:
        return self.O.shape[1]


def center_scores(raw: RawScores | np.ndarray) -> ScoreMatrix:
    """Center raw scores per column and scale by 1/sqrt(n): S = (O - mean(O)) / sqrt(n).

    The mean is the plain arithmetic mean over samples (rows); every column of
    the result sums to zero up to round-off. A single sample centers to zero.
    """
    if not isinstance(raw, RawScores):
        raw = RawScores(np.asarray(raw))
    O = raw.O
    mean = O.mean(axis=0)
    return ScoreMatrix((O - mean) / np.sqrt(raw.n))


def concat_real_imag(S: ScoreMatrix) -> ScoreMatrix:
    """Stack Re(S) over Im(S) into a real 2n-by-m score matrix C.

    C^T C = Re[S^H S] holds exactly in exact arithmetic, which is what lets
    the plain real solver handle the real-part Fisher variant.
    """
    if not S.is_complex:
        raise ValueError("concat_real_imag expects a complex score matrix")
    C = np.concatenate([S.data.real, S.data.imag], axis=0)
    return ScoreMatrix(C)
