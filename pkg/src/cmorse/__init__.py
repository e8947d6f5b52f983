"""Morse indices of constrained one-dimensional Schroedinger operators.

Four independent routes count the negative eigenvalues of ``L = -d^2/dx^2 + V``
restricted to the orthogonal complement of finitely many constraint functions:
finite-difference inertia, the constraint-matrix limit, a spectral-parameter
sweep of boundary traces, and conjugate points over a growing family of
subintervals.
"""

from .core import (
    BoundaryCondition,
    ConstraintFunction,
    Interval,
    MorseError,
    Potential,
    SchroedingerProblem,
    zero_mean_well,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "ConstraintFunction",
    "Interval",
    "MorseError",
    "Potential",
    "SchroedingerProblem",
    "zero_mean_well",
    "__version__",
]
