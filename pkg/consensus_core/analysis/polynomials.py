"""
Polynomial kernels for SISO state-space analysis.

- Faddeev-LeVerrier recursion for det(sI - A) and adj(sI - A)
- Durand-Kerner simultaneous root iteration
- Routh array stability test

Coefficient order is stated per function: ``descending`` means
[a_0, a_1, ..., a_d] for a_0 s^d + ... + a_d, ``ascending`` the reverse.
"""

from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..errors import ConvergenceError

logger = logging.getLogger(__name__)


def faddeev_leverrier(
    a: NDArray[np.float64],
) -> Tuple[NDArray[np.float64], List[NDArray[np.float64]]]:
    """
    Characteristic polynomial and adjugate expansion of sI - A.

    det(sI - A) = s^n + c_1 s^{n-1} + ... + c_n
    adj(sI - A) = sum_{k=0}^{n-1} N_k s^{n-1-k}

    with N_0 = I, c_k = -tr(A N_{k-1}) / k, N_k = A N_{k-1} + c_k I.

    Returns:
        (descending characteristic coefficients [1, c_1, ..., c_n],
         list of the n adjugate coefficient matrices N_0 ... N_{n-1})
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    identity = np.eye(n)
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    adjugate: List[NDArray[np.float64]] = []
    n_k = identity
    for k in range(1, n + 1):
        adjugate.append(n_k)
        a_n = a @ n_k
        coeffs[k] = -np.trace(a_n) / k
        n_k = a_n + coeffs[k] * identity
    return coeffs, adjugate


def transfer_numerator(
    a: NDArray[np.float64],
    b: NDArray[np.float64],
    c: NDArray[np.float64],
) -> NDArray[np.float64]:
    """
    Numerator of C (sI - A)^{-1} B, i.e. C adj(sI - A) B.

    Returns:
        Descending coefficients of length n (leading entries may be zero)
    """
    _, adjugate = faddeev_leverrier(a)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    return np.array([c @ n_k @ b for n_k in adjugate])


def trim_leading(coeffs: Sequence[float], tol: float) -> NDArray[np.float64]:
    """Drop leading descending coefficients with magnitude <= tol."""
    arr = np.asarray(coeffs, dtype=np.float64)
    nonzero = np.flatnonzero(np.abs(arr) > tol)
    if nonzero.size == 0:
        return np.zeros(0)
    return arr[nonzero[0]:]


def polyval_descending(coeffs: NDArray, z: NDArray) -> NDArray:
    """Horner evaluation for descending coefficients (vectorised over z)."""
    result = np.zeros_like(z, dtype=np.complex128)
    for coef in coeffs:
        result = result * z + coef
    return result


def durand_kerner(
    coeffs: Sequence[float],
    tol: float = 1e-10,
    max_iter: int = 500,
) -> NDArray[np.complex128]:
    """
    All complex roots of a polynomial by Durand-Kerner (Weierstrass) iteration.

    Args:
        coeffs: Descending coefficients, leading coefficient nonzero
        tol: Stop when every update is below tol * max(1, |root|)
        max_iter: Iteration cap

    Returns:
        Roots sorted by (real part, imaginary part)

    Raises:
        ConvergenceError: With the largest |p(root)| as residual
    """
    poly = np.asarray(coeffs, dtype=np.float64)
    if poly.size == 0 or poly[0] == 0.0:
        raise ValueError("Leading coefficient must be nonzero")
    monic = poly / poly[0]
    degree = monic.size - 1
    if degree == 0:
        return np.zeros(0, dtype=np.complex128)
    if degree == 1:
        return np.array([-monic[1] + 0j])

    # Cauchy bound on root magnitude; start on a rotated circle inside it.
    radius = 1.0 + float(np.max(np.abs(monic[1:])))
    angles = 2.0 * np.pi * np.arange(degree) / degree + 0.4
    roots = radius * 0.5 * np.exp(1j * angles)

    for iteration in range(max_iter):
        values = polyval_descending(monic, roots)
        diffs = roots[:, None] - roots[None, :]
        np.fill_diagonal(diffs, 1.0)
        step = values / np.prod(diffs, axis=1)
        roots = roots - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(roots))):
            break
    else:
        residual = float(np.max(np.abs(polyval_descending(monic, roots))))
        raise ConvergenceError(f"Durand-Kerner did not converge in {max_iter} iterations", residual)

    logger.debug("Durand-Kerner degree %d converged in %d iterations", degree, iteration + 1)
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def routh_hurwitz(coeffs_ascending: Sequence[float]) -> bool:
    """
    Routh array test for a polynomial given in ascending order.

    (k_1, k_2, ..., k_m, 1) means k_1 + k_2 s + ... + k_m s^{m-1} + s^m.

    Returns:
        True iff every first-column entry of the Routh array is positive.
        A zero pivot returns False.
    """
    desc = np.asarray(coeffs_ascending, dtype=np.float64)[::-1]
    desc = trim_leading(desc, 0.0)
    if desc.size == 0:
        return False
    if desc[0] < 0:
        desc = -desc
    degree = desc.size - 1
    if degree == 0:
        return desc[0] > 0

    width = degree // 2 + 1
    prev = np.zeros(width)
    curr = np.zeros(width)
    even = desc[0::2]
    odd = desc[1::2]
    prev[: even.size] = even
    curr[: odd.size] = odd
    first_column = [prev[0], curr[0]]

    for _ in range(degree - 1):
        pivot = curr[0]
        if pivot <= 0.0:
            return False
        nxt = np.zeros(width)
        nxt[:-1] = (pivot * prev[1:] - prev[0] * curr[1:]) / pivot
        first_column.append(nxt[0])
        prev, curr = curr, nxt

    return all(entry > 0.0 for entry in first_column)
