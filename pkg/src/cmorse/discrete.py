"""Finite-difference route: assemble the quadratic form and count its inertia."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .core import BoundaryCondition, ConstraintFunction, MorseError, SchroedingerProblem

__all__ = [
    "DiscreteForm",
    "Inertia",
    "ShiftAtEigenvalueError",
    "assemble",
    "constrain",
    "inertia",
    "inertia_below",
    "morse_index",
]

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
SHIFT_NUDGE = 1e-10
DEFAULT_N = 400


class ShiftAtEigenvalueError(MorseError):
    pass


@dataclass(frozen=True)
class DiscreteForm:
    """Symmetric matrix whose eigenvalues approximate those of ``-d^2/dx^2 + V``.

    ``weights`` are the trapezoid weights of the nodes in ``grid``; the
    matrix acts on ``sqrt(weights) * u`` so it is symmetric for both
    boundary conditions.  ``diag``/``offdiag`` are kept while the form is
    tridiagonal and dropped after compression.
    """

    matrix: np.ndarray
    grid: np.ndarray
    weights: np.ndarray
    mass_scale: float
    diag: np.ndarray | None = None
    offdiag: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_tridiagonal(self) -> bool:
        return self.diag is not None

    def gershgorin_lower(self) -> np.ndarray:
        a = self.matrix
        radius = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
        return np.diag(a) - radius


def assemble(problem: SchroedingerProblem, n_interior: int = DEFAULT_N) -> DiscreteForm:
    """Three-point discretization of the form ``int u'v' + V u v``.

    Dirichlet keeps the ``n_interior`` interior nodes.  Neumann keeps the two
    boundary nodes as well; with half weights there, the scaled matrix
    reproduces the ghost-node reflection stencil.
    """
    if n_interior < 8:
        raise ValueError("n_interior must be >= 8")
    iv = problem.interval
    h = iv.length / (n_interior + 1)
    nodes = iv.left + h * np.arange(n_interior + 2)
    if problem.bc is BoundaryCondition.DIRICHLET:
        grid = nodes[1:-1]
        weights = np.full(n_interior, h)
        diag = 2.0 / h**2 + problem.potential(grid)
        off = np.full(n_interior - 1, -1.0 / h**2)
    else:
        grid = nodes
        weights = np.full(n_interior + 2, h)
        weights[0] = weights[-1] = 0.5 * h
        # stiffness of sum (u_{i+1} - u_i)^2 / h
        k_diag = np.full(n_interior + 2, 2.0 / h)
        k_diag[0] = k_diag[-1] = 1.0 / h
        root_w = np.sqrt(weights)
        diag = k_diag / weights + problem.potential(grid)
        off = (-1.0 / h) / (root_w[:-1] * root_w[1:])
    matrix = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    return DiscreteForm(matrix, grid, weights, h, diag, off)


def constrain(form: DiscreteForm, constraints: Sequence[ConstraintFunction]) -> DiscreteForm:
    """Compress the form onto the weighted orthogonal complement of the constraints."""
    m = len(constraints)
    if m == 0:
        return form
    root_w = np.sqrt(form.weights)
    cmat = np.column_stack([c(form.grid) * root_w for c in constraints])
    q, r = np.linalg.qr(cmat, mode="complete")
    rd = np.abs(np.diag(r[:m]))
    if rd.min() <= 1e-10 * rd.max():
        raise ValueError("constraints are rank-deficient on the grid")
    comp = q[:, m:]
    compressed = comp.T @ form.matrix @ comp
    compressed = 0.5 * (compressed + compressed.T)
    return DiscreteForm(compressed, form.grid, form.weights, form.mass_scale)


class Inertia(NamedTuple):
    negative: int
    zero: int
    positive: int
    shift: float
    perturbation: float


def _tridiagonal_pivots(diag, off, shift):
    # LDL^T pivots of a symmetric tridiagonal matrix (Sturm recurrence)
    n = len(diag)
    d = np.empty(n)
    d[0] = diag[0] - shift
    off2 = off * off
    for i in range(1, n):
        d[i] = diag[i] - shift - off2[i - 1] / d[i - 1] if d[i - 1] != 0 else -np.inf
    return d


def _dense_pivots(matrix, shift):
    # Bunch-Kaufman LDL^T; 2x2 blocks contribute their two eigenvalues
    a = matrix - shift * np.eye(matrix.shape[0])
    _, dmat, _ = scipy.linalg.ldl(a, lower=True)
    n = dmat.shape[0]
    pivots = []
    i = 0
    while i < n:
        if i + 1 < n and dmat[i + 1, i] != 0:
            pivots.extend(np.linalg.eigvalsh(dmat[i : i + 2, i : i + 2]))
            i += 2
        else:
            pivots.append(dmat[i, i])
            i += 1
    return np.asarray(pivots)


def _pivots(form, shift):
    if form.is_tridiagonal:
        return _tridiagonal_pivots(form.diag, form.offdiag, shift)
    return _dense_pivots(form.matrix, shift)


def inertia(form: DiscreteForm, shift: float = 0.0) -> Inertia:
    """Sylvester inertia of ``matrix - shift`` from the pivots of an LDL^T factorization.

    A pivot below ``PIVOT_TOL * ||matrix||`` means ``shift`` sits on an
    eigenvalue; the shift is then moved down by ``SHIFT_NUDGE`` (relative)
    and the move is logged and returned in ``perturbation``.
    """
    if form.size == 0:
        return Inertia(0, 0, 0, shift, 0.0)
    norm = max(np.linalg.norm(form.matrix, ord=np.inf), 1.0)
    pivots = _pivots(form, shift)
    small = np.abs(pivots) < PIVOT_TOL * norm
    perturbation = 0.0
    if np.any(small):
        perturbation = -SHIFT_NUDGE * max(1.0, abs(shift))
        log.warning("shift %r hits an eigenvalue; perturbing by %g", shift, perturbation)
        pivots = _pivots(form, shift + perturbation)
        if np.any(np.abs(pivots) < PIVOT_TOL * norm):
            raise ShiftAtEigenvalueError(f"shift at eigenvalue: {shift!r}")
    neg = int(np.sum(pivots < 0))
    return Inertia(neg, 0, form.size - neg, shift, perturbation)


def inertia_below(form: DiscreteForm, shift: float = 0.0) -> int:
    """Number of eigenvalues strictly below ``shift``."""
    return inertia(form, shift).negative


def morse_index(problem: SchroedingerProblem, n_interior: int = DEFAULT_N, constrained: bool = True) -> int:
    form = assemble(problem, n_interior)
    if constrained:
        form = constrain(form, problem.constraints)
    return inertia_below(form, 0.0)
