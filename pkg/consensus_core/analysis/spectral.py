"""
Symmetric eigensolver.

Cyclic Jacobi rotations: each sweep annihilates every off-diagonal pair
(p, q) once. Adequate and very robust for the desk-scale matrices used here
(n up to about 100).
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import ConvergenceError

logger = logging.getLogger(__name__)


def off_diagonal_norm(a: NDArray[np.float64]) -> float:
    """Frobenius norm of the strictly off-diagonal part."""
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(
    matrix: NDArray[np.float64],
    tol: float = 1e-12,
    max_sweeps: int = 100,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Eigen-decomposition of a real symmetric matrix.

    Args:
        matrix: Symmetric n x n array (only symmetric input is meaningful)
        tol: Off-diagonal Frobenius norm at which iteration stops,
            relative to max(1, ||matrix||_F)
        max_sweeps: Upper bound on full cyclic sweeps

    Returns:
        (eigenvalues ascending, eigenvectors as columns in the same order)

    Raises:
        ConvergenceError: If the off-diagonal mass is still above tolerance
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"jacobi_eigh needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    for sweep in range(max_sweeps):
        off = off_diagonal_norm(a)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0.0 else -1.0
                t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        off = off_diagonal_norm(a)
        if off > threshold:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", off)

    logger.debug("Jacobi converged after %d sweeps (n=%d)", sweep, n)
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]
