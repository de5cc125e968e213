"""Communication network module."""

from .graph import (
    Digraph,
    LaplacianSpectrum,
    laplacian,
    is_strongly_connected,
    is_weight_balanced,
)

__all__ = [
    "Digraph",
    "LaplacianSpectrum",
    "laplacian",
    "is_strongly_connected",
    "is_weight_balanced",
]
