"""Numerical toolkit for generalized Lame equations on a complex torus."""

from .elliptic import Lattice
from .weights import WeightVector, parse_weights

__version__ = "0.1.0"

__all__ = ["Lattice", "WeightVector", "parse_weights", "__version__"]
