"""Eigenvalue condition numbers of the real elliptic ensemble.

Exact finite-N and limiting joint densities of a real eigenvalue and its
shifted self-overlap, the special functions they need, and a Monte Carlo
sampler to check them against.
"""

from .asymptotics import (BulkCoords, EdgeCoords, StrongCoords, TQuadruple, bulk_weak_jpdf,
                          cond_density, edge_density, jpdf_edge, strong_jpdf, t_quadruple)
from .finite_n import EllipticParams, jpdf_finite, jpdf_finite_t, q_kernel, tilde_sums
from .logvalue import LogValue
from .quad import QuadratureConfig, integrate, integrate_complex

__version__ = "0.1.0"

__all__ = [
    "BulkCoords", "EdgeCoords", "EllipticParams", "LogValue", "QuadratureConfig",
    "StrongCoords", "TQuadruple", "bulk_weak_jpdf", "cond_density", "edge_density",
    "integrate", "integrate_complex", "jpdf_edge", "jpdf_finite", "jpdf_finite_t",
    "q_kernel", "strong_jpdf", "t_quadruple", "tilde_sums", "__version__",
]
