"""
Strongly convex scalar local costs.

Closed family set (gradients are hand-derived):

- ``quadratic``               c/2 (y - t)^2
- ``scaled_log_quadratic``    y^2 / (a ln(y^2 + b)) + (y - t)^2 / 2, b >= 2
- ``sqrt_ratio_quadratic``    y^2 / (a sqrt(y^2 + 1)) + y^2 / 2
- ``log_sum_exp_quadratic``   ln(e^{-s y} + e^{s y}) / 2 + y^2 / 2

Every cost carries its claimed strong-convexity constant ``l_lower`` and
gradient Lipschitz constant ``l_upper``; ``verify_assumption1`` checks the
claim on a sampled interval.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Iterator, Sequence, Tuple, Type

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from ..errors import NonCoerciveError

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
ASSUMPTION1_SLACK = 1e-9
BRACKET_LIMIT = 1e9


@dataclass(frozen=True)
class CostFunction(ABC):
    """
    Base class for a local cost f_i with analytic gradient.

    Attributes:
        l_lower: Strong-convexity constant
        l_upper: Lipschitz constant of the gradient
    """

    family: ClassVar[str] = ""

    l_lower: float
    l_upper: float

    def __post_init__(self) -> None:
        if not (self.l_lower > 0 and self.l_upper >= self.l_lower):
            raise ValueError(
                f"need 0 < l_lower <= l_upper, got l_lower={self.l_lower}, l_upper={self.l_upper}"
            )

    @abstractmethod
    def eval(self, y: float) -> float:
        """f_i(y)."""

    @abstractmethod
    def grad(self, y: float) -> float:
        """f_i'(y)."""

    def curvature(self, y: float, h: float = FD_STEP) -> float:
        """Second derivative by central differences of the gradient."""
        return (self.grad(y + h) - self.grad(y - h)) / (2.0 * h)

    def linearized(self, y0: float) -> "Quadratic":
        """Quadratic model with matching gradient and curvature at y0."""
        c = self.curvature(y0)
        return Quadratic(c=c, target=y0 - self.grad(y0) / c, l_lower=c, l_upper=c)

    def params(self) -> Dict[str, float]:
        return {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            **self.params(),
            "l_lower": self.l_lower,
            "l_upper": self.l_upper,
        }


@dataclass(frozen=True)
class Quadratic(CostFunction):
    """c/2 (y - target)^2."""

    family: ClassVar[str] = "quadratic"

    c: float = 1.0
    target: float = 0.0

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError(f"quadratic curvature c must be positive, got {self.c}")
        super().__post_init__()

    @classmethod
    def create(cls, c: float = 1.0, target: float = 0.0) -> "Quadratic":
        return cls(l_lower=c, l_upper=c, c=c, target=target)

    def eval(self, y: float) -> float:
        return 0.5 * self.c * (y - self.target) ** 2

    def grad(self, y: float) -> float:
        return self.c * (y - self.target)

    def params(self) -> Dict[str, float]:
        return {"c": self.c, "target": self.target}


@dataclass(frozen=True)
class ScaledLogQuadratic(CostFunction):
    """y^2 / (a ln(y^2 + b)) + (y - target)^2 / 2."""

    family: ClassVar[str] = "scaled_log_quadratic"

    a: float = 160.0
    b: float = 2.0
    target: float = 0.0

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.b < 2:
            raise ValueError(f"b must be >= 2 so that ln(y^2 + b) > 0, got {self.b}")
        super().__post_init__()

    def eval(self, y: float) -> float:
        return y * y / (self.a * math.log(y * y + self.b)) + 0.5 * (y - self.target) ** 2

    def grad(self, y: float) -> float:
        q = y * y + self.b
        log_q = math.log(q)
        ratio = 2.0 * y / (self.a * log_q) - 2.0 * y**3 / (self.a * log_q**2 * q)
        return ratio + (y - self.target)

    def params(self) -> Dict[str, float]:
        return {"a": self.a, "b": self.b, "target": self.target}


@dataclass(frozen=True)
class SqrtRatioQuadratic(CostFunction):
    """y^2 / (a sqrt(y^2 + 1)) + y^2 / 2."""

    family: ClassVar[str] = "sqrt_ratio_quadratic"

    a: float = 40.0

    def __post_init__(self) -> None:
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        super().__post_init__()

    def eval(self, y: float) -> float:
        return y * y / (self.a * math.sqrt(y * y + 1.0)) + 0.5 * y * y

    def grad(self, y: float) -> float:
        q = y * y + 1.0
        return y * (y * y + 2.0) / (self.a * q**1.5) + y

    def params(self) -> Dict[str, float]:
        return {"a": self.a}


@dataclass(frozen=True)
class LogSumExpQuadratic(CostFunction):
    """ln(e^{-s y} + e^{s y}) / 2 + y^2 / 2."""

    family: ClassVar[str] = "log_sum_exp_quadratic"

    s: float = 0.05

    def eval(self, y: float) -> float:
        return 0.5 * float(np.logaddexp(-self.s * y, self.s * y)) + 0.5 * y * y

    def grad(self, y: float) -> float:
        return 0.5 * self.s * math.tanh(self.s * y) + y

    def params(self) -> Dict[str, float]:
        return {"s": self.s}


COST_FAMILIES: Dict[str, Type[CostFunction]] = {
    cls.family: cls
    for cls in (Quadratic, ScaledLogQuadratic, SqrtRatioQuadratic, LogSumExpQuadratic)
}


def cost_from_dict(data: Dict[str, Any]) -> CostFunction:
    """
    Build a cost from its JSON form.

    ``l_lower``/``l_upper`` default to c for quadratics and to (0.5, 1.5)
    for the other families.
    """
    family = data.get("family")
    if family not in COST_FAMILIES:
        raise ValueError(f"unknown cost family {family!r}; expected one of {sorted(COST_FAMILIES)}")
    cls = COST_FAMILIES[family]
    params = {k: float(v) for k, v in data.items() if k not in ("family", "l_lower", "l_upper")}
    if cls is Quadratic:
        c = params.get("c", 1.0)
        default_bounds = (c, c)
    else:
        default_bounds = (0.5, 1.5)
    try:
        return cls(
            l_lower=float(data.get("l_lower", default_bounds[0])),
            l_upper=float(data.get("l_upper", default_bounds[1])),
            **params,
        )
    except TypeError as exc:
        raise ValueError(f"invalid parameters for {family}: {exc}") from exc


@dataclass(frozen=True)
class CostEnsemble:
    """The N local costs; f(y) = sum_i f_i(y)."""

    costs: Tuple[CostFunction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "costs", tuple(self.costs))
        if not self.costs:
            raise ValueError("ensemble needs at least one cost")

    def __len__(self) -> int:
        return len(self.costs)

    def __iter__(self) -> Iterator[CostFunction]:
        return iter(self.costs)

    def __getitem__(self, i: int) -> CostFunction:
        return self.costs[i]

    @property
    def l_lower(self) -> float:
        return min(f.l_lower for f in self.costs)

    @property
    def l_upper(self) -> float:
        return max(f.l_upper for f in self.costs)

    def value(self, y: float) -> float:
        return sum(f.eval(y) for f in self.costs)

    def gradient(self, y: float) -> float:
        """Aggregate gradient sum_i f_i'(y)."""
        return sum(f.grad(y) for f in self.costs)

    def local_gradients(self, z: NDArray[np.float64]) -> NDArray[np.float64]:
        """Stacked gradient of f~(z) = sum_i f_i(z_i)."""
        return np.array([f.grad(zi) for f, zi in zip(self.costs, z)])

    def linearized(self, y0: float) -> "CostEnsemble":
        return CostEnsemble(tuple(f.linearized(y0) for f in self.costs))

    def to_list(self) -> list:
        return [f.to_dict() for f in self.costs]

    @classmethod
    def from_list(cls, data: Sequence[Dict[str, Any]]) -> "CostEnsemble":
        return cls(tuple(cost_from_dict(entry) for entry in data))


def verify_assumption1(
    f: CostFunction,
    interval: Tuple[float, float],
    samples: int = 200,
) -> bool:
    """
    Sampled check of l_lower-strong convexity and l_upper-Lipschitz gradient.

    For all pairs of ``samples`` equispaced points in ``interval``:
    l_lower d^2 <= (g1 - g2) d and |g1 - g2| <= l_upper |d| (slack 1e-9).
    False is a verdict, not an error.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    if not hi > lo:
        raise ValueError(f"interval must be nondegenerate, got [{lo}, {hi}]")

    points = np.linspace(lo, hi, samples)
    grads = np.array([f.grad(p) for p in points])
    d = points[:, None] - points[None, :]
    dg = grads[:, None] - grads[None, :]
    strong = f.l_lower * d * d <= dg * d + ASSUMPTION1_SLACK
    lipschitz = np.abs(dg) <= f.l_upper * np.abs(d) + ASSUMPTION1_SLACK
    ok = bool(np.all(strong) and np.all(lipschitz))
    if not ok:
        logger.debug(
            "%s fails the convexity check on [%g, %g]: strong=%s lipschitz=%s",
            f.family, lo, hi, bool(np.all(strong)), bool(np.all(lipschitz)),
        )
    return ok


def global_minimizer(ensemble: CostEnsemble, tol: float = 1e-10) -> float:
    """
    Minimiser y* of sum_i f_i, independent of any distributed dynamics.

    The aggregate gradient is increasing; a sign change is bracketed
    starting from [-1, 1] with doubling, then located with Brent's method
    to an x-tolerance that guarantees |sum_i f_i'(y*)| <= tol.

    Raises:
        NonCoerciveError: If no sign change exists within |y| <= 1e9
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    g = ensemble.gradient
    lo, hi = -1.0, 1.0
    while g(lo) > 0.0 or g(hi) < 0.0:
        if g(lo) > 0.0:
            lo *= 2.0
        if g(hi) < 0.0:
            hi *= 2.0
        if max(abs(lo), abs(hi)) > BRACKET_LIMIT:
            raise NonCoerciveError(
                f"aggregate gradient has no sign change within |y| <= {BRACKET_LIMIT:g}"
            )
    logger.debug("minimiser bracket [%g, %g]", lo, hi)

    if g(lo) == 0.0:
        return lo
    if g(hi) == 0.0:
        return hi
    lipschitz = sum(f.l_upper for f in ensemble)
    y_star = brentq(g, lo, hi, xtol=tol / (2.0 * lipschitz), rtol=4 * np.finfo(float).eps)
    return float(y_star)
