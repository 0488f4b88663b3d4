"""Numerics for Musielak-Orlicz modular spaces.

Profile calculus (Fenchel conjugation, convex envelopes, doubling minorants),
structural condition checkers, modular/Luxemburg field utilities, star-shaped
mollification, modular Poincare studies, and a truncation-scheme solver for
monotone elliptic problems with integrable data.
"""

from .grid import GridDomain, ScalarField, VectorField, unit_square
from .profiles import RadialProfile, biconjugate, conjugate, default_nodes, power_profile
from .transform import HAVE_COMPILED

__version__ = "0.1.0"

__all__ = [
    "GridDomain",
    "ScalarField",
    "VectorField",
    "unit_square",
    "RadialProfile",
    "conjugate",
    "biconjugate",
    "default_nodes",
    "power_profile",
    "HAVE_COMPILED",
    "__version__",
]
