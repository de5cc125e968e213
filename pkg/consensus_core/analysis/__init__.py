"""Numerical kernels shared by the analysis and design modules."""

from .spectral import jacobi_eigh
from .polynomials import (
    faddeev_leverrier,
    transfer_numerator,
    durand_kerner,
    routh_hurwitz,
)
from .lyapunov import solve_lyapunov, lyapunov_residual, is_hurwitz_matrix

__all__ = [
    "jacobi_eigh",
    "faddeev_leverrier",
    "transfer_numerator",
    "durand_kerner",
    "routh_hurwitz",
    "solve_lyapunov",
    "lyapunov_residual",
    "is_hurwitz_matrix",
]
