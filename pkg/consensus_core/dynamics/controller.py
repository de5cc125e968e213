"""
Per-agent integral controller with a dirty-derivative observer.

Output feedback (m >= 2):

    xi0'   = y - z
    chi_r' = chi_{r+1} - l_r (chi_1 - y),   chi_m' = -l_m (chi_1 - y)
    u      = -eps [k1 xi0 + k2 (y - z) + sum_{r=2}^{m-1} k_{r+1} chi_r + chi_m]

with observer gains l_r = gamma^r k_{m-r+1}. For m = 1 there is no
observer and u = -eps [k1 xi0 + (y - z)].

Functions accept scalars or per-agent arrays; observer states are indexed
along the last axis so ``chi`` may be (m,) or (N, m).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Union

import numpy as np
from numpy.typing import NDArray

from ..analysis.polynomials import routh_hurwitz
from ..errors import NotHurwitzError
from ..optimization.generator import GeneratorGains
from .plant import PlantMatrices

logger = logging.getLogger(__name__)

ArrayLike = Union[float, NDArray[np.float64]]


@dataclass(frozen=True, eq=False)
class Gains:
    """
    All controller and generator parameters.

    Attributes:
        k: Stabilizer coefficients k_1..k_m; k_1 + k_2 s + ... + s^m must be Hurwitz
        epsilon: Output-feedback gain (>= 0; 0 means open loop)
        gamma: Observer gain scale (>= 1)
        generator: alpha, beta of the optimal signal generator
        lambda0: Pole location the k vector came from, if any
    """

    k: NDArray[np.float64]
    epsilon: float
    gamma: float
    generator: GeneratorGains
    lambda0: Optional[float] = None

    def __post_init__(self) -> None:
        k = np.atleast_1d(np.asarray(self.k, dtype=np.float64))
        if k.ndim != 1 or k.size < 1:
            raise ValueError(f"k must be a nonempty vector, got shape {k.shape}")
        if not routh_hurwitz(np.append(k, 1.0)):
            raise NotHurwitzError(f"stabilizer polynomial with k = {k.tolist()} is not Hurwitz")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)

    @property
    def m(self) -> int:
        return int(self.k.size)

    @property
    def observer_size(self) -> int:
        """Observer dimension: m for m >= 2, 0 for m = 1."""
        return self.m if self.m >= 2 else 0

    @property
    def observer_l(self) -> NDArray[np.float64]:
        """l_r = gamma^r k_{m-r+1}, r = 1..m."""
        m = self.m
        return np.array([self.gamma**r * self.k[m - r] for r in range(1, m + 1)])

    @property
    def alpha(self) -> float:
        return self.generator.alpha

    @property
    def beta(self) -> float:
        return self.generator.beta

    def replace(self, **changes: Any) -> "Gains":
        fields = {
            "k": self.k,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "generator": self.generator,
            "lambda0": self.lambda0,
        }
        fields.update(changes)
        return Gains(**fields)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "k": [float(x) for x in self.k],
            "alpha": self.alpha,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "observer_l": [float(x) for x in self.observer_l],
        }
        if self.lambda0 is not None:
            data["lambda0"] = self.lambda0
        return data


@dataclass(frozen=True, eq=False)
class ControllerState:
    """Integral state xi0 and observer state chi (last axis of length m or 0)."""

    xi0: ArrayLike
    chi: NDArray[np.float64]


def integral_rhs(y: ArrayLike, z: ArrayLike) -> ArrayLike:
    """xi0' = y - z."""
    return y - z


def _check_observer(gains: Gains, chi: NDArray[np.float64]) -> None:
    if chi.shape[-1] != gains.m:
        raise ValueError(f"observer state needs {gains.m} entries on its last axis, got {chi.shape[-1]}")


def control_output(gains: Gains, state: ControllerState, y: ArrayLike, z: ArrayLike) -> ArrayLike:
    """Output-feedback integral control u."""
    k = gains.k
    if gains.m == 1:
        return -gains.epsilon * (k[0] * state.xi0 + (y - z))
    chi = np.asarray(state.chi, dtype=np.float64)
    _check_observer(gains, chi)
    sigma = k[0] * state.xi0 + k[1] * (y - z) + chi[..., gains.m - 1]
    for r in range(2, gains.m):
        sigma = sigma + k[r] * chi[..., r - 1]
    return -gains.epsilon * sigma


def observer_rhs(gains: Gains, chi: NDArray[np.float64], y: ArrayLike) -> NDArray[np.float64]:
    """
    Dirty-derivative observer chi'.

    Raises:
        ValueError: For m = 1 (no observer)
    """
    if gains.m < 2:
        raise ValueError("observer is undefined for relative degree 1")
    chi = np.asarray(chi, dtype=np.float64)
    _check_observer(gains, chi)
    innovation = chi[..., 0] - y
    l = gains.observer_l
    out = np.empty_like(chi)
    out[..., :-1] = chi[..., 1:] - l[:-1] * innovation[..., None]
    out[..., -1] = -l[-1] * innovation
    return out


def output_derivatives(
    mats: PlantMatrices,
    x: NDArray[np.float64],
    count: int,
) -> NDArray[np.float64]:
    """
    y, y', ..., y^{(count-1)} from the state, valid while C A^{r-1} B = 0.

    y^{(r)} = C A^r x + C A^{r-1} E includes the constant disturbance.
    ``x`` may be (n,) or (N, n); the derivative index is the last axis.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape[:-1] + (count,))
    row = mats.C.copy()
    prev_row = None
    for r in range(count):
        out[..., r] = x @ row
        if prev_row is not None:
            out[..., r] += prev_row @ mats.E
        prev_row = row
        row = row @ mats.A
    return out


def partial_state_control(
    gains: Gains,
    xi0: ArrayLike,
    x: NDArray[np.float64],
    z: ArrayLike,
    mats: PlantMatrices,
) -> ArrayLike:
    """
    Integral control with the true output derivatives in place of the
    observer: u = -eps [k1 xi0 + k2 (y - z) + k3 y' + ... + k_m y^{(m-2)} + y^{(m-1)}].
    """
    m = gains.m
    derivs = output_derivatives(mats, x, m)
    y = derivs[..., 0]
    if m == 1:
        return -gains.epsilon * (gains.k[0] * xi0 + (y - z))
    return control_output(gains, ControllerState(xi0=xi0, chi=derivs), y, z)


def initial_controller_state(gains: Gains, y0: ArrayLike) -> ControllerState:
    """Default initialisation xi0 = 0, chi = (y(0), 0, ..., 0)."""
    y0 = np.asarray(y0, dtype=np.float64)
    chi = np.zeros(y0.shape + (gains.observer_size,))
    if gains.observer_size:
        chi[..., 0] = y0
    return ControllerState(xi0=np.zeros_like(y0), chi=chi)
