"""
Continuous-time Lyapunov equation A^T P + P A = -q I.

Solved by vectorisation: with row-major vec, vec(A^T P) = (A^T kron I) vec(P)
and vec(P A) = (I kron A^T) vec(P), giving one dense n^2 x n^2 system.
"""

from __future__ import annotations

import logging

import numpy as np
from numpy.typing import NDArray

from ..errors import NotHurwitzError

logger = logging.getLogger(__name__)


def is_hurwitz_matrix(a: NDArray[np.float64]) -> bool:
    """True iff every eigenvalue of A has strictly negative real part."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return True
    return bool(np.all(np.linalg.eigvals(a).real < 0.0))


def lyapunov_residual(a: NDArray[np.float64], p: NDArray[np.float64], q: float = 2.0) -> float:
    """Max-abs entry of A^T P + P A + q I."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a.T @ p + p @ a + q * np.eye(a.shape[0]))))


def solve_lyapunov(a: NDArray[np.float64], q: float = 2.0) -> NDArray[np.float64]:
    """
    Unique symmetric positive-definite P with A^T P + P A = -q I.

    Args:
        a: Hurwitz square matrix (an empty 0 x 0 matrix gives an empty P)
        q: Right-hand side scale, 2 in every use of this library

    Raises:
        NotHurwitzError: If A has an eigenvalue with nonnegative real part
        numpy.linalg.LinAlgError: If the Kronecker system is numerically singular
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if a.size == 0:
        return np.zeros((0, 0))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"Lyapunov solve needs a square matrix, got shape {a.shape}")
    if not is_hurwitz_matrix(a):
        raise NotHurwitzError(
            f"Matrix is not Hurwitz (max real eigenvalue {np.max(np.linalg.eigvals(a).real):.3e})"
        )

    n = a.shape[0]
    identity = np.eye(n)
    kron_sum = np.kron(a.T, identity) + np.kron(identity, a.T)
    rhs = (-q * identity).reshape(-1)
    p = np.linalg.solve(kron_sum, rhs).reshape(n, n)
    p = 0.5 * (p + p.T)
    logger.debug("Lyapunov solve n=%d residual=%.2e", n, lyapunov_residual(a, p, q))
    return p
