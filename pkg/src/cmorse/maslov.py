"""Spectral-parameter sweep of the constrained Cauchy-data plane.

The constrained Morse index is minus the Maslov index of ``lam -> mu_c(lam)``
on ``[lam_inf, 0]`` relative to the boundary plane.  Crossings are located
as zeros of an Evans-type determinant and classified by the crossing form
``-int u^2``, which is negative at every crossing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import (
    BoundaryTrace,
    ConstraintDegeneracyError,
    CrossingKind,
    CrossingRecord,
    Interval,
    MorseError,
    SchroedingerProblem,
    intersection_dimension,
    symplectic_form,
)
from .oracle import quadrature
from .shooting import (
    ConstrainedSolutionBasis,
    bordered_matrices,
    integrate_extended,
    propagate,
    constrained_basis,
    default_steps,
    trace_plane,
)

__all__ = [
    "GridResolutionError",
    "LambdaSweepReport",
    "lambda_infinity",
    "evans_function",
    "singular_ratio",
    "kernel_coefficients",
    "crossing_form_lambda",
    "crossing_form_matrix",
    "crossing_form_symplectic",
    "sweep",
]

log = logging.getLogger(__name__)

DEFAULT_GRID = 512
KERNEL_TOL = 1e-6
ZERO_CROSSING_REL = 1e-8
ROOT_XTOL_REL = 1e-10
SUBCELL_PROBES = 8


class GridResolutionError(MorseError):
    pass


@dataclass(frozen=True)
class LambdaSweepReport:
    lambda_infinity: float
    crossings: tuple[CrossingRecord, ...]
    maslov_index: int
    morse_index: int
    kernel: tuple[CrossingRecord, ...] = ()
    grid_points: int = DEFAULT_GRID
    notes: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "lambda_infinity": self.lambda_infinity,
            "grid_points": self.grid_points,
            "crossings": [c.as_dict() for c in self.crossings],
            "kernel": [c.as_dict() for c in self.kernel],
            "maslov_index": self.maslov_index,
            "morse_index": self.morse_index,
            "notes": list(self.notes),
        }


def lambda_infinity(problem: SchroedingerProblem, samples: int = 4097) -> float:
    """A spectral parameter strictly below every constrained eigenvalue."""
    lo, _ = problem.potential.bounds(problem.interval, samples)
    return lo - (1.0 + 0.01 * abs(lo))


def evans_function(problem: SchroedingerProblem, lams, sub: Interval | None = None,
                   steps: int | None = None) -> np.ndarray:
    """Determinant of the boundary rows of the constrained trace frame.

    The frame is the oriented orthonormal null-space basis of the
    constraint map, so the value equals ``det(bordered) / sqrt(det(W W^T))``
    and is continuous in ``lam`` wherever the constraint map has full rank.
    """
    mats = bordered_matrices(problem, lams, sub, steps)
    w = mats[:, 2:, :]
    norm = np.sqrt(np.linalg.det(w @ np.swapaxes(w, 1, 2))) if problem.m else 1.0
    return np.linalg.det(mats) / norm


def singular_ratio(problem, lams, sub=None, steps=None) -> np.ndarray:
    """Smallest over largest singular value of the bordered matrices."""
    sv = np.linalg.svd(bordered_matrices(problem, lams, sub, steps), compute_uv=False)
    return sv[:, -1] / sv[:, 0]


def _basis_near(problem, lam, sub, steps, scale):
    try:
        return constrained_basis(problem, lam, sub, steps)
    except ConstraintDegeneracyError:
        nudged = lam + 1e-6 * scale
        log.warning("constraint degeneracy at lambda=%r; using %r", lam, nudged)
        return constrained_basis(problem, nudged, sub, steps)


def kernel_coefficients(basis: ConstrainedSolutionBasis, bc, tol: float = KERNEL_TOL):
    """Coefficient vectors (columns) of basis elements whose traces lie in the boundary plane."""
    plane = trace_plane(basis)
    dim = intersection_dimension(plane, bc, tol)
    frame = np.column_stack([t.trace().as_array() for t in basis.basis])
    _, _, vt = np.linalg.svd(frame[list(bc.annihilated_rows), :])
    return dim, vt[vt.shape[0] - dim :].T if dim else np.zeros((basis.dim, 0))


def crossing_form_lambda(basis: ConstrainedSolutionBasis, kernel_vector) -> float:
    """``-int u^2`` for the element ``u`` selected by ``kernel_vector``."""
    kernel_vector = np.asarray(kernel_vector, dtype=float)
    if not np.any(kernel_vector):
        raise ValueError("zero kernel vector")
    u = basis.element(kernel_vector).u
    return -float(quadrature(u * u, dx=basis.basis[0].h))


def crossing_form_matrix(basis: ConstrainedSolutionBasis, coeffs: np.ndarray) -> np.ndarray:
    """Crossing form on the span of several kernel vectors (``-`` Gram matrix)."""
    us = [basis.element(c).u for c in coeffs.T]
    h = basis.basis[0].h
    return np.array([[-float(quadrature(a * b, dx=h)) for b in us] for a in us])


def crossing_form_symplectic(problem: SchroedingerProblem, basis: ConstrainedSolutionBasis, kernel_vector,
                             step: float = 1e-5) -> float:
    """``omega(tr u, tr du/dlam)`` along a smooth family of constrained solutions through ``u``.

    The family keeps the initial parameters of ``u`` projected onto the
    constraint-map null space at each ``lam``; ``du/dlam`` is a centred
    difference with spacing ``step``.  Agrees with ``-int u^2``.
    """
    sub, lam, m = basis.subinterval, basis.lam, problem.m
    steps = len(basis.basis[0].x) - 1
    params = basis.params @ np.asarray(kernel_vector, dtype=float)

    def trace_at(mu):
        ident = np.zeros((2 + 2 * m, 2 + m))
        ident[: 2 + m] = np.eye(2 + m)
        w = propagate(problem, mu, sub.left, sub.right, ident, steps)[0][2 + m :, :]
        v = params - np.linalg.pinv(w) @ (w @ params) if m else params
        return integrate_extended(problem, mu, sub, np.concatenate([v, np.zeros(m)]), steps).trace().as_array()

    here = trace_at(lam)
    rate = (trace_at(lam + step) - trace_at(lam - step)) / (2 * step)
    return symplectic_form(BoundaryTrace.from_array(here), BoundaryTrace.from_array(rate))


def _record(problem, lam, sub, steps, scale, tol, note=""):
    basis = _basis_near(problem, lam, sub, steps, scale)
    dim, coeffs = kernel_coefficients(basis, problem.bc, tol)
    if dim == 0:
        return None
    form = crossing_form_matrix(basis, coeffs)
    return CrossingRecord.from_form(lam, form, CrossingKind.LAMBDA_SWEEP, note=note)


def _interior_minima(sampled, skip):
    return [i for i in range(1, len(sampled) - 1)
            if i not in skip and sampled[i] <= sampled[i - 1] and sampled[i] <= sampled[i + 1]]


def sweep(problem: SchroedingerProblem, grid_points: int = DEFAULT_GRID, steps: int | None = None,
          kernel_tol: float = KERNEL_TOL) -> LambdaSweepReport:
    """Count constrained eigenvalues in ``[lam_inf, 0)`` through crossings of the trace plane."""
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    sub = problem.interval
    steps = default_steps(sub.length) if steps is None else int(steps)
    lam_inf = lambda_infinity(problem)
    scale = abs(lam_inf)
    xtol = ROOT_XTOL_REL * scale
    zero_band = ZERO_CROSSING_REL * scale
    notes = []

    grid = np.linspace(lam_inf, 0.0, grid_points)
    kernel = []
    if singular_ratio(problem, [0.0], sub, steps)[0] < kernel_tol:
        rec = _record(problem, 0.0, sub, steps, scale, kernel_tol, note="kernel at lambda = 0")
        if rec is not None:
            kernel.append(rec)
            grid[-1] = -1e-7 * scale
            notes.append("zero is an eigenvalue; last grid point moved to -1e-7*|lam_inf|")

    def evans(lam):
        return float(evans_function(problem, [lam], sub, steps)[0])

    values = evans_function(problem, grid, sub, steps)
    exact = np.flatnonzero(values[:-1] == 0)
    if exact.size:
        grid[exact] += xtol
        values = evans_function(problem, grid, sub, steps)
    ratios = singular_ratio(problem, grid, sub, steps)
    if values[0] == 0:
        raise MorseError("crossing at lambda_infinity")

    crossings = []
    changed = np.flatnonzero(values[:-1] * values[1:] < 0)
    for i in changed:
        a, b = grid[i], grid[i + 1]
        probes = evans_function(problem, np.linspace(a, b, SUBCELL_PROBES + 1), sub, steps)
        if np.sum(probes[:-1] * probes[1:] < 0) > 1:
            raise GridResolutionError(f"increase grid_points: several crossings in [{a}, {b}]")
        root = brentq(evans, a, b, xtol=xtol)
        if abs(root) <= zero_band:
            if not kernel:
                rec = _record(problem, root, sub, steps, scale, kernel_tol, note="kernel at lambda = 0")
                if rec is not None:
                    kernel.append(rec)
            continue
        rec = _record(problem, root, sub, steps, scale, kernel_tol)
        if rec is None:
            rec = _record(problem, root, sub, steps, scale, 100 * kernel_tol,
                          note="dimension confirmed at relaxed tolerance")
        if rec is None:
            raise MorseError(f"sign change at lambda={root!r} without a detectable intersection")
        crossings.append(rec)

    # even-order zeros leave no sign change; look at local minima of |E| and of the singular ratio
    flagged = set(changed) | set(changed + 1)
    objectives = (
        (np.abs(values), lambda lam: abs(evans(lam))),
        (ratios, lambda lam: singular_ratio(problem, [lam], sub, steps)[0]),
    )
    for sampled, objective in objectives:
        for i in _interior_minima(sampled, flagged):
            res = minimize_scalar(objective, bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                                  options={"xatol": xtol})
            lam = float(res.x)
            if abs(lam) <= zero_band or any(abs(lam - c.parameter) <= 1e3 * xtol for c in crossings):
                continue
            if evans(lam) * values[i] < 0:
                raise GridResolutionError(
                    f"increase grid_points: two crossings inside [{grid[i - 1]}, {grid[i + 1]}]"
                )
            rec = _record(problem, lam, sub, steps, scale, kernel_tol)
            if rec is None:
                continue
            if rec.dimension % 2 == 1:
                raise GridResolutionError(f"increase grid_points: unresolved crossings near lambda={lam!r}")
            crossings.append(rec)

    crossings.sort(key=lambda c: c.parameter)
    maslov = sum(c.signature[0] - c.signature[1] for c in crossings)
    return LambdaSweepReport(
        lambda_infinity=lam_inf,
        crossings=tuple(crossings),
        maslov_index=int(maslov),
        morse_index=int(-maslov),
        kernel=tuple(kernel),
        grid_points=grid_points,
        notes=tuple(notes),
    )
