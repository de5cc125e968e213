"""
Weighted communication digraph and its Laplacian spectrum.

Edge convention: ``weights[i, j] = a_ij > 0`` means agent i receives
information from agent j (edge j -> i). The JSON form lists edges as
``{"from": j, "to": i, "w": a_ij}`` with 1-indexed nodes.

Laplacian: L = D_in - A with D_in = diag(row sums of A).
Sym(L) = (L + L^T) / 2; its eigenvalues 0 = lambda_1 < lambda_2 <= ... <= lambda_N
(for weight-balanced, strongly connected graphs) feed the generator tuning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterable, List, Tuple

import networkx as nx
import numpy as np
from numpy.typing import NDArray

from ..analysis.spectral import jacobi_eigh

logger = logging.getLogger(__name__)

DEFAULT_BALANCE_TOL = 1e-9


def _frozen(arr: NDArray) -> NDArray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Digraph:
    """
    Weighted directed graph on n agents.

    Attributes:
        weights: n x n nonnegative adjacency, a_ii = 0
    """

    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        w = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ValueError(f"weights must be a nonempty square matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise ValueError("self-loops are not allowed (a_ii must be 0)")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int, float]]) -> "Digraph":
        """
        Build from 0-indexed (source, target, weight) triples.

        Repeated edges accumulate their weights.
        """
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        w = np.zeros((n, n))
        for source, target, weight in edges:
            if not (0 <= source < n and 0 <= target < n):
                raise ValueError(f"edge ({source}, {target}) outside 0..{n - 1}")
            w[target, source] += weight
        return cls(w)

    @classmethod
    def cycle(cls, n: int, weight: float = 1.0) -> "Digraph":
        """Directed ring 1 -> 2 -> ... -> n -> 1."""
        return cls.from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)] if n > 1 else [])

    def neighbors(self, i: int) -> Tuple[int, ...]:
        """In-neighbours of agent i in ascending index order."""
        return tuple(int(j) for j in np.flatnonzero(self.weights[i] > 0))

    def edges(self) -> List[Tuple[int, int, float]]:
        """0-indexed (source, target, weight) triples, ordered by target then source."""
        return [
            (int(j), int(i), float(self.weights[i, j]))
            for i in range(self.n)
            for j in range(self.n)
            if self.weights[i, j] > 0
        ]

    def to_networkx(self) -> nx.DiGraph:
        """networkx view with edges pointing along information flow (j -> i)."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(self.edges())
        return graph

    @cached_property
    def laplacian_matrix(self) -> NDArray[np.float64]:
        """L = D_in - A (read-only)."""
        return _frozen(np.diag(self.weights.sum(axis=1)) - self.weights)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the 1-indexed JSON edge-list form."""
        return {
            "n": self.n,
            "edges": [
                {"from": source + 1, "to": target + 1, "w": weight}
                for source, target, weight in self.edges()
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Digraph":
        """Deserialize from the 1-indexed JSON edge-list form."""
        n = int(data["n"])
        edges = [
            (int(e["from"]) - 1, int(e["to"]) - 1, float(e.get("w", 1.0)))
            for e in data.get("edges", [])
        ]
        return cls.from_edges(n, edges)


@dataclass(frozen=True, eq=False)
class LaplacianSpectrum:
    """Laplacian, its symmetric part and the sorted spectrum of Sym(L)."""

    laplacian: NDArray[np.float64]
    sym: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64] = field(repr=False)

    @property
    def lambda2(self) -> float:
        """Second-smallest eigenvalue of Sym(L) (0.0 for a single node)."""
        return float(self.eigenvalues[1]) if self.eigenvalues.size > 1 else 0.0

    @property
    def lambda_n(self) -> float:
        """Largest eigenvalue of Sym(L)."""
        return float(self.eigenvalues[-1])

    def zero_multiplicity(self, tol: float = 1e-9) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= tol))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "lambda2": self.lambda2,
            "lambda_n": self.lambda_n,
        }


def laplacian(g: Digraph) -> LaplacianSpectrum:
    """
    Laplacian L = D_in - A, Sym(L) and the ascending spectrum of Sym(L).

    The spectrum is computed with cyclic Jacobi rotations (tolerance 1e-12).
    """
    lap = np.array(g.laplacian_matrix)
    sym = 0.5 * (lap + lap.T)
    eigenvalues, eigenvectors = jacobi_eigh(sym, tol=1e-12)
    logger.debug("Sym(L) spectrum for n=%d: %s", g.n, eigenvalues)
    return LaplacianSpectrum(
        laplacian=_frozen(lap),
        sym=_frozen(sym),
        eigenvalues=_frozen(eigenvalues),
        eigenvectors=_frozen(eigenvectors),
    )


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every agent reaches every other along positive-weight edges."""
    return bool(nx.is_strongly_connected(g.to_networkx()))


def is_weight_balanced(g: Digraph, tol: float = DEFAULT_BALANCE_TOL) -> bool:
    """True iff in-degree equals out-degree (within tol) at every node."""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    in_degree = g.weights.sum(axis=1)
    out_degree = g.weights.sum(axis=0)
    return bool(np.all(np.abs(in_degree - out_degree) <= tol))
