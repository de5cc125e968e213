"""
Uncertain SISO linear plant, affine in the parameter vector w.

    x' = A(w) x + B(w) u + E,    y = C(w) x
    A(w) = A0 + sum_k w_k A_k   (likewise B, C)

w ranges over a box W containing the origin. This module materialises the
plant at a parameter point and analyses it: relative degree m and
high-frequency gain b1 = C A^{m-1} B, transmission zeros, the
minimum-phase sweep over W, and the normal-form decomposition

    x0'      = A0 x0 + b0 xi_1
    xi_j'    = xi_{j+1}                  (j < m)
    xi_m'    = A1 x0 + A2 xi + b1 u
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..analysis.polynomials import durand_kerner, transfer_numerator
from ..errors import RelativeDegreeError

logger = logging.getLogger(__name__)

DEFAULT_RELDEG_TOL = 1e-8
MAX_TRANSFORM_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class ParameterBox:
    """Axis-aligned box W = [lower_1, upper_1] x ... x [lower_nw, upper_nw]."""

    lower: NDArray[np.float64]
    upper: NDArray[np.float64]

    def __post_init__(self) -> None:
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError(f"box bounds must be equal-length vectors, got {lo.shape} and {hi.shape}")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        if np.any(lo > 0) or np.any(hi < 0):
            raise ValueError("parameter box must contain the origin")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_intervals(cls, intervals: Sequence[Sequence[float]]) -> "ParameterBox":
        if len(intervals) == 0:
            return cls(np.zeros(0), np.zeros(0))
        arr = np.asarray(intervals, dtype=np.float64)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def center(self) -> NDArray[np.float64]:
        return 0.5 * (self.lower + self.upper)

    def corners(self) -> List[NDArray[np.float64]]:
        """All 2^n_w vertices (a single empty point when n_w = 0)."""
        return [np.array(c) for c in itertools.product(*zip(self.lower, self.upper))]

    def grid(self, points_per_axis: int = 3) -> List[NDArray[np.float64]]:
        """Tensor grid with ``points_per_axis`` equispaced points per axis."""
        if points_per_axis < 2:
            raise ValueError(f"points_per_axis must be >= 2, got {points_per_axis}")
        axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(self.lower, self.upper)]
        return [np.array(p) for p in itertools.product(*axes)]

    def contains(self, w: NDArray[np.float64], tol: float = 1e-12) -> bool:
        w = np.asarray(w, dtype=np.float64)
        return bool(np.all(w >= self.lower - tol) and np.all(w <= self.upper + tol))

    def to_list(self) -> List[List[float]]:
        return [[float(lo), float(hi)] for lo, hi in zip(self.lower, self.upper)]


@dataclass(frozen=True, eq=False)
class PlantMatrices:
    """A plant materialised at one parameter point."""

    A: NDArray[np.float64]
    B: NDArray[np.float64]
    C: NDArray[np.float64]
    E: NDArray[np.float64]

    @property
    def n(self) -> int:
        return int(self.A.shape[0])


@dataclass(frozen=True, eq=False)
class AffinePlant:
    """
    A(w), B(w), C(w) affine in w over a box, plus a constant disturbance E.

    Attributes:
        A0, B0, C0: Nominal matrices (n x n, n, n)
        A_dev, B_dev, C_dev: Per-parameter deviations, one entry per axis of ``box``
        box: Parameter box W
        disturbance: Constant n-vector E added to x' (zeros when absent)
    """

    A0: NDArray[np.float64]
    B0: NDArray[np.float64]
    C0: NDArray[np.float64]
    A_dev: Tuple[NDArray[np.float64], ...]
    B_dev: Tuple[NDArray[np.float64], ...]
    C_dev: Tuple[NDArray[np.float64], ...]
    box: ParameterBox
    disturbance: Optional[NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        a0 = np.atleast_2d(np.asarray(self.A0, dtype=np.float64))
        n = a0.shape[0]
        if a0.shape != (n, n):
            raise ValueError(f"A0 must be square, got shape {a0.shape}")
        b0 = self._vector(self.B0, n, "B0")
        c0 = self._vector(self.C0, n, "C0")
        n_w = self.box.dim
        devs = []
        for name, mats, shape in (
            ("A_dev", self.A_dev, (n, n)),
            ("B_dev", self.B_dev, (n,)),
            ("C_dev", self.C_dev, (n,)),
        ):
            mats = tuple(np.asarray(m, dtype=np.float64).reshape(shape) for m in mats)
            if len(mats) != n_w:
                raise ValueError(f"{name} needs {n_w} entries (one per parameter), got {len(mats)}")
            devs.append(mats)
        e = np.zeros(n) if self.disturbance is None else self._vector(self.disturbance, n, "disturbance")
        object.__setattr__(self, "A0", a0)
        object.__setattr__(self, "B0", b0)
        object.__setattr__(self, "C0", c0)
        object.__setattr__(self, "A_dev", devs[0])
        object.__setattr__(self, "B_dev", devs[1])
        object.__setattr__(self, "C_dev", devs[2])
        object.__setattr__(self, "disturbance", e)

    @staticmethod
    def _vector(value: Any, n: int, name: str) -> NDArray[np.float64]:
        arr = np.asarray(value, dtype=np.float64).reshape(-1)
        if arr.size != n:
            raise ValueError(f"{name} must have {n} entries, got {arr.size}")
        return arr

    @property
    def n(self) -> int:
        return int(self.A0.shape[0])

    @property
    def n_w(self) -> int:
        return self.box.dim

    def materialize(self, w: Optional[Sequence[float]] = None) -> PlantMatrices:
        """
        (A(w), B(w), C(w), E). Points outside the box are allowed
        (robustness stress tests) but logged.
        """
        w_arr = np.zeros(self.n_w) if w is None else np.asarray(w, dtype=np.float64).reshape(-1)
        if w_arr.size != self.n_w:
            raise ValueError(f"w must have {self.n_w} entries, got {w_arr.size}")
        if not self.box.contains(w_arr):
            logger.warning("Parameter point %s lies outside the box %s", w_arr, self.box.to_list())
        a = self.A0 + sum((wk * ak for wk, ak in zip(w_arr, self.A_dev)), np.zeros_like(self.A0))
        b = self.B0 + sum((wk * bk for wk, bk in zip(w_arr, self.B_dev)), np.zeros_like(self.B0))
        c = self.C0 + sum((wk * ck for wk, ck in zip(w_arr, self.C_dev)), np.zeros_like(self.C0))
        return PlantMatrices(A=a, B=b, C=c, E=self.disturbance.copy())

    def to_dict(self) -> Dict[str, Any]:
        """JSON plant section; deviations keyed by 1-based parameter index."""
        return {
            "A0": self.A0.tolist(),
            "B0": self.B0.tolist(),
            "C0": self.C0.tolist(),
            "deviations": {
                str(k + 1): {"A": a.tolist(), "B": b.tolist(), "C": c.tolist()}
                for k, (a, b, c) in enumerate(zip(self.A_dev, self.B_dev, self.C_dev))
            },
            "box": self.box.to_list(),
            "disturbance": self.disturbance.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AffinePlant":
        """
        Parse the JSON plant section. Missing deviation entries (or missing
        A/B/C inside an entry) are zero.
        """
        a0 = np.atleast_2d(np.asarray(data["A0"], dtype=np.float64))
        n = a0.shape[0]
        box = ParameterBox.from_intervals(data.get("box", []))
        deviations = data.get("deviations", {})
        a_dev, b_dev, c_dev = [], [], []
        for k in range(box.dim):
            entry = deviations.get(str(k + 1), {})
            a_dev.append(np.asarray(entry.get("A", np.zeros((n, n))), dtype=np.float64))
            b_dev.append(np.asarray(entry.get("B", np.zeros(n)), dtype=np.float64))
            c_dev.append(np.asarray(entry.get("C", np.zeros(n)), dtype=np.float64))
        extra = sorted(set(deviations) - {str(k + 1) for k in range(box.dim)})
        if extra:
            raise ValueError(f"deviation keys {extra} have no matching box interval")
        return cls(
            A0=a0,
            B0=data["B0"],
            C0=data["C0"],
            A_dev=tuple(a_dev),
            B_dev=tuple(b_dev),
            C_dev=tuple(c_dev),
            box=box,
            disturbance=data.get("disturbance"),
        )


def markov_parameters(a: NDArray, b: NDArray, c: NDArray) -> NDArray[np.float64]:
    """C A^{r-1} B for r = 1..n."""
    a = np.asarray(a, dtype=np.float64)
    vec = np.asarray(b, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    out = np.zeros(a.shape[0])
    for r in range(a.shape[0]):
        out[r] = c @ vec
        vec = a @ vec
    return out


def relative_degree(
    a: NDArray,
    b: NDArray,
    c: NDArray,
    tol: float = DEFAULT_RELDEG_TOL,
) -> Tuple[int, float]:
    """
    Relative degree m and high-frequency gain b1 = C A^{m-1} B.

    Raises:
        RelativeDegreeError: If every Markov parameter is within tol of zero
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    markov = markov_parameters(a, b, c)
    above = np.flatnonzero(np.abs(markov) > tol)
    if above.size == 0:
        raise RelativeDegreeError(
            f"no relative degree <= {markov.size}: all Markov parameters below {tol:g}"
        )
    m = int(above[0]) + 1
    return m, float(markov[m - 1])


def transmission_zeros(
    a: NDArray,
    b: NDArray,
    c: NDArray,
    tol: float = DEFAULT_RELDEG_TOL,
) -> NDArray[np.complex128]:
    """
    Roots of the numerator of C (sI - A)^{-1} B.

    The numerator comes from the Faddeev-LeVerrier adjugate expansion; its
    first m - 1 coefficients vanish, leaving a degree n - m polynomial with
    leading coefficient b1, solved by Durand-Kerner.
    """
    m, _ = relative_degree(a, b, c, tol)
    numerator = transfer_numerator(a, b, c)[m - 1:]
    return durand_kerner(numerator, tol=1e-10, max_iter=500)


@dataclass(frozen=True, eq=False)
class PlantAnalysis:
    """Relative degree, high-frequency gain and zeros at one parameter point."""

    m: int
    b1: float
    zeros: NDArray[np.complex128]
    minimum_phase: bool
    w: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "w": [float(x) for x in self.w],
            "m": self.m,
            "b1": self.b1,
            "zeros": [[float(z.real), float(z.imag)] for z in self.zeros],
            "minimum_phase": self.minimum_phase,
        }


def analyze(
    a: NDArray,
    b: NDArray,
    c: NDArray,
    tol: float = DEFAULT_RELDEG_TOL,
    w: Optional[NDArray] = None,
) -> PlantAnalysis:
    """Relative degree, b1, transmission zeros and the minimum-phase flag."""
    m, b1 = relative_degree(a, b, c, tol)
    zeros = transmission_zeros(a, b, c, tol)
    return PlantAnalysis(
        m=m,
        b1=b1,
        zeros=zeros,
        minimum_phase=bool(np.all(zeros.real < 0)),
        w=np.zeros(0) if w is None else np.asarray(w, dtype=np.float64),
    )


@dataclass
class Assumption3Report:
    """Outcome of the relative-degree / sign / minimum-phase sweep over W."""

    nominal_m: int
    samples: List[PlantAnalysis] = field(default_factory=list)
    violators: List[Tuple[NDArray[np.float64], str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violators

    @property
    def b1_range(self) -> Tuple[float, float]:
        values = [s.b1 for s in self.samples]
        return (min(values), max(values)) if values else (float("nan"), float("nan"))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "nominal_m": self.nominal_m,
            "samples": len(self.samples),
            "b1_range": list(self.b1_range),
            "violators": [{"w": [float(x) for x in w], "reason": reason} for w, reason in self.violators],
        }


def default_sample_points(box: ParameterBox, points_per_axis: int = 3) -> List[NDArray[np.float64]]:
    """Box corners plus a uniform grid (corners are never dropped)."""
    points = box.corners()
    seen = {tuple(p) for p in points}
    for p in box.grid(points_per_axis):
        if tuple(p) not in seen:
            seen.add(tuple(p))
            points.append(p)
    return points


def check_assumption3(
    plant: AffinePlant,
    grid: Optional[Sequence[NDArray]] = None,
    tol: float = DEFAULT_RELDEG_TOL,
) -> Assumption3Report:
    """
    Sample W and check, at every point: relative degree equal to the
    nominal m (at w = 0), b1(w) > 0, every transmission zero in the open
    left half-plane. Violations are report entries, never exceptions.
    """
    nominal = plant.materialize()
    nominal_m, _ = relative_degree(nominal.A, nominal.B, nominal.C, tol)
    points = default_sample_points(plant.box) if grid is None else [np.asarray(p, float) for p in grid]
    report = Assumption3Report(nominal_m=nominal_m)

    for w in points:
        mats = plant.materialize(w)
        try:
            sample = analyze(mats.A, mats.B, mats.C, tol, w=w)
        except RelativeDegreeError as exc:
            report.violators.append((w, str(exc)))
            continue
        report.samples.append(sample)
        reasons = []
        if sample.m != nominal_m:
            reasons.append(f"relative degree {sample.m} != nominal {nominal_m}")
        if sample.b1 <= 0:
            reasons.append(f"high-frequency gain b1 = {sample.b1:.6g} <= 0")
        if not sample.minimum_phase:
            reasons.append(f"non-minimum-phase zeros {np.round(sample.zeros, 6).tolist()}")
        if reasons:
            report.violators.append((w, "; ".join(reasons)))
        logger.debug("w=%s m=%d b1=%.6g zeros=%s", w, sample.m, sample.b1, sample.zeros)

    logger.info(
        "Plant sweep over %d points: %s", len(points), "pass" if report.passed else "FAIL"
    )
    return report


@dataclass(frozen=True, eq=False)
class NormalForm:
    """
    Normal-form blocks and the change of basis (x0, xi) = T x.

    Attributes:
        T: n x n transform; its last m rows are C, CA, ..., CA^{m-1}
        A0z: (n-m) x (n-m) zero dynamics
        b0z: (n-m) coupling of xi_1 into the zero dynamics
        A1z: (n-m) row, x0 -> xi_m'
        A2z: m row, xi -> xi_m'
        b1: High-frequency gain
    """

    T: NDArray[np.float64]
    A0z: NDArray[np.float64]
    b0z: NDArray[np.float64]
    A1z: NDArray[np.float64]
    A2z: NDArray[np.float64]
    b1: float

    @property
    def m(self) -> int:
        return int(self.A2z.size)

    @property
    def n(self) -> int:
        return int(self.T.shape[0])

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.T))

    def block_matrices(self) -> Tuple[NDArray, NDArray, NDArray]:
        """(A_bar, B_bar, C_bar) of the normal form in (x0, xi) coordinates."""
        n, m = self.n, self.m
        k = n - m
        a_bar = np.zeros((n, n))
        a_bar[:k, :k] = self.A0z
        if k:
            a_bar[:k, k] = self.b0z
        for j in range(m - 1):
            a_bar[k + j, k + j + 1] = 1.0
        a_bar[n - 1, :k] = self.A1z
        a_bar[n - 1, k:] = self.A2z
        b_bar = np.zeros(n)
        b_bar[-1] = self.b1
        c_bar = np.zeros(n)
        c_bar[k] = 1.0
        return a_bar, b_bar, c_bar

    def reconstruct(self) -> Tuple[NDArray, NDArray, NDArray]:
        """(A, B, C) recovered as T^{-1} A_bar T, T^{-1} B_bar, C_bar T."""
        a_bar, b_bar, c_bar = self.block_matrices()
        t_inv = np.linalg.inv(self.T)
        return t_inv @ a_bar @ self.T, t_inv @ b_bar, c_bar @ self.T


def normal_form(
    a: NDArray,
    b: NDArray,
    c: NDArray,
    tol: float = DEFAULT_RELDEG_TOL,
) -> NormalForm:
    """
    Normal-form decomposition of a SISO plant with relative degree m.

    The zero-dynamics rows start as an orthonormal basis S of the left null
    space of [B, AB, ..., A^{m-1}B] (complete QR), so the input never enters
    them. A unipotent correction x0 <- x0 + M xi then removes xi_2..xi_m from
    the zero dynamics, leaving only the b0 xi_1 coupling.

    Raises:
        RelativeDegreeError: No relative degree, or T numerically singular
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    n = a.shape[0]
    m, b1 = relative_degree(a, b, c, tol)
    k = n - m

    xi_rows = np.zeros((m, n))
    row = c.copy()
    for j in range(m):
        xi_rows[j] = row
        row = row @ a
    if k:
        krylov = np.column_stack([np.linalg.matrix_power(a, j) @ b for j in range(m)])
        q, _ = np.linalg.qr(krylov, mode="complete")
        s = q[:, m:].T
        t0 = np.vstack([s, xi_rows])
    else:
        t0 = xi_rows

    cond0 = np.linalg.cond(t0)
    if not np.isfinite(cond0) or cond0 > MAX_TRANSFORM_CONDITION:
        raise RelativeDegreeError(
            f"normal-form transform is singular (cond = {cond0:.3e}); relative-degree tolerance too loose?"
        )

    a_t0 = t0 @ a @ np.linalg.inv(t0)
    f = a_t0[:k, :k]
    g = a_t0[:k, k:]

    # Columns M_1..M_m of the correction, M_m = 0, M_{j-1} = F M_j - G_j.
    corr = np.zeros((k, m))
    for j in range(m - 1, 0, -1):
        corr[:, j - 1] = f @ corr[:, j] - g[:, j]
    lift = np.eye(n)
    lift[:k, k:] = corr
    t = lift @ t0

    a_t = t @ a @ np.linalg.inv(t)
    nf = NormalForm(
        T=t,
        A0z=a_t[:k, :k].copy(),
        b0z=a_t[:k, k].copy() if k else np.zeros(0),
        A1z=a_t[n - 1, :k].copy(),
        A2z=a_t[n - 1, k:].copy(),
        b1=float((t @ b)[-1]),
    )
    logger.debug("normal form n=%d m=%d cond(T)=%.3e", n, m, nf.condition)
    return nf
