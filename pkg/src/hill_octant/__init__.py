"""Spectral toolkit for 1D periodic Schrodinger operators: band structures,
gap states, half-solid junction spectra, inverse gap design, and
Minkowski-sum cluster assembly for separable multi-dimensional operators."""

__version__ = "0.1.0"

from .bands import BandStructure, band_structure
from .potential import Potential, fourier_potential, piecewise_potential

__all__ = [
    "__version__",
    "BandStructure",
    "band_structure",
    "Potential",
    "fourier_potential",
    "piecewise_potential",
]
