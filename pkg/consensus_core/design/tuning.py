"""
Gain synthesis and closed-loop certification.

- stabilizer coefficients k from p(s) = (s + lambda0)^m
- the epsilon lower bound assembled from Lyapunov solutions of the
  zero dynamics (P0), the integrator chain (P1) and the observer error (P_chi)
- an eigenvalue certificate of the closed loop linearised at the optimum,
  evaluated over sampled parameter points, and the gamma search built on it
- resolution of "auto" gains in a scenario config
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..analysis.lyapunov import lyapunov_residual, solve_lyapunov
from ..analysis.polynomials import routh_hurwitz
from ..dynamics.controller import Gains
from ..dynamics.plant import (
    AffinePlant,
    NormalForm,
    ParameterBox,
    default_sample_points,
    normal_form,
    relative_degree,
)
from ..errors import AssumptionError, ConsensusError, RelativeDegreeError, TuningError
from ..network.graph import Digraph, laplacian
from ..optimization.costs import CostEnsemble, global_minimizer
from ..optimization.generator import GeneratorGains, tune_alpha_beta
from ..simulation.engine import ClosedLoop, Scenario

logger = logging.getLogger(__name__)

__all__ = [
    "stabilizer_gains",
    "hurwitz_check",
    "solve_lyapunov",
    "TranslatedSystem",
    "translated_system",
    "observer_error_matrix",
    "observer_lyapunov",
    "EpsilonBound",
    "epsilon_bound",
    "default_grid",
    "TuningCertificate",
    "certify_closed_loop",
    "gamma_search",
    "GainSpec",
    "resolve_gains",
]

ZERO_EIG_TOL = 1e-8
TRANSLATION_TOL = 1e-6
MARGIN_TOL = 1e-9
DEFAULT_GAMMA_MAX = 1024.0


def stabilizer_gains(m: int, lambda0: float) -> NDArray[np.float64]:
    """k_j = binom(m, j-1) lambda0^{m-j+1}: the coefficients of (s + lambda0)^m below s^m."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not lambda0 > 0:
        raise ValueError(f"lambda0 must be positive, got {lambda0}")
    return np.array([math.comb(m, j - 1) * lambda0 ** (m - j + 1) for j in range(1, m + 1)])


def hurwitz_check(coeffs: Sequence[float]) -> bool:
    """Routh test of a polynomial given in ascending order."""
    return routh_hurwitz(coeffs)


def default_grid(box: ParameterBox) -> List[NDArray[np.float64]]:
    """All 2^n_w box corners plus the center."""
    points = box.corners()
    center = box.center
    if not any(np.array_equal(center, p) for p in points):
        points.append(center)
    return points


@dataclass(frozen=True, eq=False)
class TranslatedSystem:
    """
    Tracking-error system in (x0, xi_e, sigma) coordinates,
    sigma = k1 xi0 + k2 xi_1 + ... + k_m xi_{m-1} + xi_m.
    """

    A0bar: NDArray[np.float64]
    b0bar: NDArray[np.float64]
    A2bar: NDArray[np.float64]
    A3bar: float
    A1: NDArray[np.float64]
    b1: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "A0bar": self.A0bar.tolist(),
            "b0bar": self.b0bar.tolist(),
            "A2bar": self.A2bar.tolist(),
            "A3bar": self.A3bar,
            "A1": self.A1.tolist(),
            "b1": self.b1,
        }


def translated_system(nf: NormalForm, k: Sequence[float]) -> TranslatedSystem:
    k = np.asarray(k, dtype=np.float64)
    m = k.size
    if nf.m != m:
        raise ValueError(f"k has {m} entries but the plant has relative degree {nf.m}")
    a0bar = np.zeros((m, m))
    for j in range(m - 1):
        a0bar[j, j + 1] = 1.0
    a0bar[-1, :] = -k
    b0bar = np.zeros(m)
    b0bar[-1] = 1.0
    shifted = np.concatenate([[0.0], nf.A2z[: m - 1]])
    a2bar = k @ a0bar + shifted - nf.A2z[-1] * k
    return TranslatedSystem(
        A0bar=a0bar,
        b0bar=b0bar,
        A2bar=a2bar,
        A3bar=float(nf.A2z[-1] + k[-1]),
        A1=nf.A1z.copy(),
        b1=nf.b1,
    )


def observer_error_matrix(k: Sequence[float]) -> NDArray[np.float64]:
    """A_chi: first column -(k_m, ..., k_1), ones on the superdiagonal."""
    k = np.asarray(k, dtype=np.float64)
    m = k.size
    a_chi = np.zeros((m, m))
    a_chi[:, 0] = -k[::-1]
    for r in range(m - 1):
        a_chi[r, r + 1] = 1.0
    return a_chi


def observer_lyapunov(k: Sequence[float]) -> NDArray[np.float64]:
    """P_chi with A_chi^T P_chi + P_chi A_chi = -2I (empty for m = 1)."""
    if len(k) < 2:
        return np.zeros((0, 0))
    return solve_lyapunov(observer_error_matrix(k))


@dataclass(frozen=True, eq=False)
class EpsilonSample:
    w: NDArray[np.float64]
    b1: float
    p0b0_sq: float
    xi_sigma: float
    translated: TranslatedSystem


@dataclass(frozen=True, eq=False)
class EpsilonBound:
    """
    epsilon lower bound and its ingredients.

    eps_bound = max{2 / min b1, (max Xi_sigma + eps_hat ||P1 b0bar||^2 + 2) / min b1}
    with Xi_sigma(w) = A3bar(w) + ||A1(w)||^2 + ||A2bar(w)||^2 / eps_hat and
    eps_hat = 4 max ||P0(w) b0(w)||^2 + 1.
    """

    eps_hat: float
    eps_bound: float
    floor: float
    b1_min: float
    xi_sigma_max: float
    p1b0_sq: float
    P1: NDArray[np.float64]
    samples: List[EpsilonSample] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eps_hat": self.eps_hat,
            "eps_bound": self.eps_bound,
            "floor": self.floor,
            "b1_min": self.b1_min,
            "xi_sigma_max": self.xi_sigma_max,
            "p1b0_sq": self.p1b0_sq,
            "P1": self.P1.tolist(),
            "samples": len(self.samples),
        }


def epsilon_bound(
    plant: AffinePlant,
    k: Sequence[float],
    grid: Optional[Sequence[NDArray]] = None,
    eps_hat: Optional[float] = None,
) -> EpsilonBound:
    """
    Lower bound on epsilon over sampled parameter points.

    Args:
        plant: Uncertain plant
        k: Stabilizer coefficients (length = relative degree)
        grid: Parameter points; defaults to corners plus a 3-per-axis grid
        eps_hat: Override for eps_hat; must not be below the formula value

    Raises:
        AssumptionError: A sample has another relative degree, b1 <= 0 or a nonminimum-phase zero
    """
    k = np.asarray(k, dtype=np.float64)
    points = default_sample_points(plant.box) if grid is None else [np.asarray(p, float) for p in grid]

    staged = []
    for w in points:
        mats = plant.materialize(w)
        try:
            nf = normal_form(mats.A, mats.B, mats.C)
        except RelativeDegreeError as exc:
            raise AssumptionError(f"w = {w.tolist()}: {exc}") from exc
        if nf.m != k.size:
            raise AssumptionError(f"w = {w.tolist()}: relative degree {nf.m} != {k.size}")
        if nf.b1 <= 0:
            raise AssumptionError(f"w = {w.tolist()}: high-frequency gain b1 = {nf.b1:.3e} <= 0")
        if nf.A0z.size:
            try:
                p0 = solve_lyapunov(nf.A0z)
            except ConsensusError as exc:
                raise AssumptionError(f"w = {w.tolist()}: zero dynamics not Hurwitz") from exc
            p0b0_sq = float(np.sum((p0 @ nf.b0z) ** 2))
        else:
            p0b0_sq = 0.0
        staged.append((w, nf, p0b0_sq))

    formula_hat = 4.0 * max(s[2] for s in staged) + 1.0
    if eps_hat is None:
        eps_hat = formula_hat
    elif eps_hat < formula_hat:
        raise ValueError(f"eps_hat = {eps_hat} is below the admissible minimum {formula_hat}")

    samples = []
    p1 = None
    for w, nf, p0b0_sq in staged:
        tr = translated_system(nf, k)
        if p1 is None:
            p1 = solve_lyapunov(tr.A0bar)
        xi_sigma = tr.A3bar + float(np.sum(tr.A1**2)) + float(np.sum(tr.A2bar**2)) / eps_hat
        samples.append(EpsilonSample(w=w, b1=nf.b1, p0b0_sq=p0b0_sq, xi_sigma=xi_sigma, translated=tr))
        logger.debug("w=%s b1=%.4g |P0 b0|^2=%.4g Xi_sigma=%.4g", w, nf.b1, p0b0_sq, xi_sigma)

    b1_min = min(s.b1 for s in samples)
    xi_max = max(s.xi_sigma for s in samples)
    p1b0_sq = float(np.sum(p1[:, -1] ** 2))
    floor = 2.0 / b1_min
    bound = max(floor, (xi_max + eps_hat * p1b0_sq + 2.0) / b1_min)
    logger.info("epsilon bound %.6g (eps_hat %.6g, min b1 %.6g)", bound, eps_hat, b1_min)
    return EpsilonBound(
        eps_hat=eps_hat,
        eps_bound=bound,
        floor=floor,
        b1_min=b1_min,
        xi_sigma_max=xi_max,
        p1b0_sq=p1b0_sq,
        P1=p1,
        samples=samples,
    )


@dataclass(frozen=True, eq=False)
class TuningCertificate:
    """
    Closed-loop eigenvalue certificate over sampled parameter points.

    ``margins[i]`` is the largest real part among the closed-loop
    eigenvalues at ``sampled_w[i]``, the structural zero excluded.
    """

    gamma_used: float
    epsilon_used: float
    sampled_w: List[NDArray[np.float64]]
    margins: List[float]
    y_star: float
    P0: NDArray[np.float64]
    P1: NDArray[np.float64]
    Pchi: NDArray[np.float64]
    eps_hat: Optional[float] = None
    eps_bound: Optional[float] = None
    lyapunov_residual: float = 0.0

    @property
    def worst_margin(self) -> float:
        return max(self.margins)

    @property
    def passed(self) -> bool:
        return self.worst_margin < -MARGIN_TOL

    @property
    def violators(self) -> List[Tuple[NDArray[np.float64], float]]:
        return [(w, m) for w, m in zip(self.sampled_w, self.margins) if m >= -MARGIN_TOL]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "gamma_used": self.gamma_used,
            "epsilon_used": self.epsilon_used,
            "y_star": self.y_star,
            "worst_margin": self.worst_margin,
            "samples": [
                {"w": [float(x) for x in w], "margin": m}
                for w, m in zip(self.sampled_w, self.margins)
            ],
            "eps_hat": self.eps_hat,
            "eps_bound": self.eps_bound,
            "P0": self.P0.tolist(),
            "P1": self.P1.tolist(),
            "Pchi": self.Pchi.tolist(),
            "lyapunov_residual": self.lyapunov_residual,
        }

    def to_text(self) -> str:
        lines = [
            "Tuning Certificate",
            "=" * 40,
            "",
            f"gamma:            {self.gamma_used:g}",
            f"epsilon:          {self.epsilon_used:g}",
            f"y* (linearised):  {self.y_star:.6f}",
        ]
        if self.eps_bound is not None:
            lines.append(f"epsilon bound:    {self.eps_bound:.6g} (eps_hat {self.eps_hat:.6g})")
        lines += ["", "Margins (max Re eig, structural zero excluded):"]
        for w, m in zip(self.sampled_w, self.margins):
            lines.append(f"  w = {np.round(w, 6).tolist()}: {m:+.6e}")
        lines += ["", f"Worst margin: {self.worst_margin:+.6e}", f"Verdict: {'PASS' if self.passed else 'FAIL'}"]
        return "\n".join(lines)


def _margin(matrix: NDArray[np.float64], translation: NDArray[np.float64]) -> float:
    eigenvalues, eigenvectors = np.linalg.eig(matrix)
    kept = []
    for i, lam in enumerate(eigenvalues):
        if abs(lam) <= ZERO_EIG_TOL:
            vec = eigenvectors[:, i]
            vec = vec / np.linalg.norm(vec)
            residual = np.linalg.norm(vec - np.vdot(translation, vec) * translation)
            if residual <= TRANSLATION_TOL:
                continue
        kept.append(lam.real)
    return max(kept) if kept else -math.inf


def certify_closed_loop(
    plant: AffinePlant,
    ensemble: CostEnsemble,
    graph: Digraph,
    gains: Gains,
    grid: Optional[Sequence[NDArray]] = None,
    y_star: Optional[float] = None,
    controller: str = "output",
    with_bound: bool = True,
) -> TuningCertificate:
    """
    Certify local exponential stability of the consensus equilibrium.

    Costs are replaced by their quadratic models at y*; the resulting affine
    closed loop is assembled from the simulator's right-hand side at every
    sampled w and its eigenvalues computed with LAPACK. The zero eigenvalue
    whose eigenvector is the v-translation along 1_N is excluded.
    """
    if y_star is None:
        y_star = global_minimizer(ensemble)
    points = default_grid(plant.box) if grid is None else [np.asarray(p, float) for p in grid]
    scenario = Scenario(graph=graph, plant=plant, costs=ensemble.linearized(y_star), gains=gains)
    loop = ClosedLoop(scenario, controller)
    translation = loop.layout.v_translation()

    margins = []
    for w in points:
        matrix = loop.linear_matrix(plant.materialize(w))
        margin = _margin(matrix, translation)
        margins.append(margin)
        logger.debug("gamma=%g eps=%g w=%s margin=%.6e", gains.gamma, gains.epsilon, w, margin)

    nominal = plant.materialize(plant.box.center)
    p0 = np.zeros((0, 0))
    p1 = np.zeros((0, 0))
    eps_hat = bound = None
    residual = 0.0
    if with_bound:
        try:
            nf = normal_form(nominal.A, nominal.B, nominal.C)
            if nf.A0z.size:
                p0 = solve_lyapunov(nf.A0z)
                residual = max(residual, lyapunov_residual(nf.A0z, p0))
            eb = epsilon_bound(plant, gains.k, grid=points)
            p1 = eb.P1
            residual = max(residual, lyapunov_residual(eb.samples[0].translated.A0bar, p1))
            eps_hat, bound = eb.eps_hat, eb.eps_bound
        except ConsensusError as exc:
            logger.warning("epsilon bound unavailable: %s", exc)
    pchi = observer_lyapunov(gains.k)
    if pchi.size:
        residual = max(residual, lyapunov_residual(observer_error_matrix(gains.k), pchi))

    cert = TuningCertificate(
        gamma_used=gains.gamma,
        epsilon_used=gains.epsilon,
        sampled_w=points,
        margins=margins,
        y_star=float(y_star),
        P0=p0,
        P1=p1,
        Pchi=pchi,
        eps_hat=eps_hat,
        eps_bound=bound,
        lyapunov_residual=residual,
    )
    logger.info(
        "Certificate gamma=%g eps=%g over %d points: worst margin %.4e (%s)",
        gains.gamma, gains.epsilon, len(points), cert.worst_margin, "pass" if cert.passed else "fail",
    )
    return cert


def gamma_search(
    plant: AffinePlant,
    ensemble: CostEnsemble,
    graph: Digraph,
    gains: Gains,
    grid: Optional[Sequence[NDArray]] = None,
    gamma_max: float = DEFAULT_GAMMA_MAX,
    rel_tol: float = 1e-2,
    controller: str = "output",
) -> float:
    """
    Smallest certified observer scale gamma.

    Doubles gamma = 1, 2, 4, ... up to gamma_max until the certificate
    passes, then bisects between the last failing and the first passing
    value down to ``rel_tol`` (relative). The gamma in ``gains`` is ignored.

    Raises:
        TuningError: No gamma <= gamma_max passes; carries (gamma, margin) pairs
    """
    if gains.m == 1:
        return 1.0
    if gamma_max < 1:
        raise ValueError(f"gamma_max must be >= 1, got {gamma_max}")
    y_star = global_minimizer(ensemble)

    def worst(gamma: float) -> float:
        cert = certify_closed_loop(
            plant, ensemble, graph, gains.replace(gamma=gamma), grid, y_star, controller, with_bound=False
        )
        return cert.worst_margin

    tried: List[Tuple[float, float]] = []
    gamma = 1.0
    while gamma <= gamma_max:
        margin = worst(gamma)
        tried.append((gamma, margin))
        if margin < -MARGIN_TOL:
            break
        gamma *= 2.0
    else:
        raise TuningError(
            f"no gamma <= {gamma_max:g} passes the closed-loop certificate", margins=tried
        )

    hi = gamma
    if hi > 1.0:
        lo = hi / 2.0
        while hi - lo > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if worst(mid) < -MARGIN_TOL:
                hi = mid
            else:
                lo = mid

    if worst(2.0 * hi) >= -MARGIN_TOL:
        logger.warning("certificate passes at gamma=%g but fails at %g", hi, 2.0 * hi)
    logger.info("gamma search: %g (doubling trail %s)", hi, tried)
    return hi


@dataclass(frozen=True)
class GainSpec:
    """
    Gains as written in a config; None marks an "auto" entry.

    Attributes:
        k: Stabilizer coefficients, or None for (s + lambda0)^m
        lambda0: Pole location used when k is auto
        alpha, beta: Generator gains, or None for the formula values
        tuning: "manual" keeps given alpha/beta, "formula" always uses the formula
        epsilon: Output gain, or None for the epsilon bound
        gamma: Observer scale, or None for the certificate search
        gamma_max: Upper end of the gamma search
    """

    k: Optional[Tuple[float, ...]] = None
    lambda0: float = 1.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    tuning: str = "manual"
    epsilon: Optional[float] = None
    gamma: Optional[float] = None
    gamma_max: float = DEFAULT_GAMMA_MAX

    def __post_init__(self) -> None:
        if self.tuning not in ("manual", "formula"):
            raise ValueError(f"tuning must be 'manual' or 'formula', got {self.tuning!r}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.gamma is not None and self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if self.gamma_max < 1:
            raise ValueError(f"gamma_max must be >= 1, got {self.gamma_max}")
        if not self.lambda0 > 0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")

    @property
    def is_resolved(self) -> bool:
        return None not in (self.k, self.alpha, self.beta, self.epsilon, self.gamma) and self.tuning == "manual"

    def to_dict(self) -> Dict[str, Any]:
        auto = "auto"
        return {
            "k": list(self.k) if self.k is not None else auto,
            "lambda0": self.lambda0,
            "alpha": self.alpha if self.alpha is not None else auto,
            "beta": self.beta if self.beta is not None else auto,
            "tuning": self.tuning,
            "epsilon": self.epsilon if self.epsilon is not None else auto,
            "gamma": self.gamma if self.gamma is not None else auto,
            "gamma_max": self.gamma_max,
        }


def resolve_gains(
    spec: GainSpec,
    plant: AffinePlant,
    ensemble: CostEnsemble,
    graph: Digraph,
    grid: Optional[Sequence[NDArray]] = None,
) -> Gains:
    """
    Fill every "auto" entry: k from (s + lambda0)^m, alpha/beta from the
    generator formula, epsilon from ``epsilon_bound``, gamma from
    ``gamma_search``.
    """
    nominal = plant.materialize()
    m, _ = relative_degree(nominal.A, nominal.B, nominal.C)
    if spec.k is None:
        k = stabilizer_gains(m, spec.lambda0)
        lambda0: Optional[float] = spec.lambda0
    else:
        k = np.asarray(spec.k, dtype=np.float64)
        lambda0 = None
        if k.size != m:
            raise ValueError(f"k has {k.size} entries but the plant has relative degree {m}")

    alpha, beta = spec.alpha, spec.beta
    if spec.tuning == "formula" or alpha is None or beta is None:
        spectrum = laplacian(graph)
        formula = tune_alpha_beta(ensemble.l_lower, ensemble.l_upper, spectrum.lambda2, spectrum.lambda_n)
        if spec.tuning == "formula":
            alpha, beta = formula.alpha, formula.beta
        else:
            alpha = formula.alpha if alpha is None else alpha
            beta = formula.beta if beta is None else beta
    generator = GeneratorGains(alpha=alpha, beta=beta)

    epsilon = spec.epsilon
    if epsilon is None:
        epsilon = epsilon_bound(plant, k).eps_bound

    gains = Gains(k=k, epsilon=epsilon, gamma=spec.gamma or 1.0, generator=generator, lambda0=lambda0)
    if spec.gamma is None:
        gamma = gamma_search(plant, ensemble, graph, gains, grid=grid, gamma_max=spec.gamma_max)
        gains = gains.replace(gamma=gamma)
    logger.info("Resolved gains: %s", gains.to_dict())
    return gains
