"""Shared independent oracles for the test suite.

These deliberately take a different route from the library: the dense operator
is formed explicitly and solved by LU (numpy), not by the Gram factorization
and not by the symmetric-positive solve the library's own oracle uses.
"""

import numpy as np


def dense_solve(S_data, lam, v, variant="plain"):
    """Brute-force reference solve of the damped system via an explicit m-by-m LU."""
    A = np.asarray(S_data)
    m = A.shape[1]
    if variant == "plain":
        dense = A.T @ A
    elif variant == "hermitian":
        dense = A.conj().T @ A
    elif variant == "realpart":
        dense = A.real.T @ A.real + A.imag.T @ A.imag
    else:
        raise ValueError(variant)
    dense = dense + lam * np.eye(m)
    return np.linalg.solve(dense, np.asarray(v))


def rel_err(x, ref):
    """Relative L2 error with a unit floor, the comparison used throughout."""
    return float(np.linalg.norm(x - ref) / max(1.0, np.linalg.norm(ref)))


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))
