"""Conjugate points of the constrained Dirichlet problem on a growing family of intervals.

A parameter ``t`` is a constrained conjugate point when some nonzero ``u``
with ``u = 0`` at both ends of ``Omega_t`` solves ``L u = sum_i a_i phi_i``
and ``int_{Omega_t} u phi_i = 0``.  Summing their multiplicities over
``t < t_max`` gives the constrained Morse index when the family shrinks to
a point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import (
    BoundaryCondition,
    ConstraintFunction,
    CrossingKind,
    CrossingRecord,
    Interval,
    SchroedingerProblem,
)
from .maslov import GridResolutionError, _interior_minima
from .shooting import Trajectory, default_steps, propagate

__all__ = [
    "DomainFamily",
    "DefectResult",
    "ConjugateReport",
    "restricted_constraints",
    "defect_matrices",
    "dirichlet_defect",
    "crossing_form_t",
    "crossing_form_t_matrix",
    "first_eigenvalue_bound",
    "scan",
]

log = logging.getLogger(__name__)

NULLITY_TOL = 1e-8
ROOT_XTOL = 1e-10
ENDPOINT_BAND = 1e-8
SHRINK_FLAG = 1e-3
DEFAULT_GRID = 256
T_MIN_FRACTION = 0.02


@dataclass(frozen=True)
class DomainFamily:
    """Increasing family ``t -> (left(t), right(t))`` on ``(t_min, t_max]``.

    Endpoint velocities default to centred differences of the endpoint maps.
    """

    left_fn: Callable[[float], float]
    right_fn: Callable[[float], float]
    t_min: float
    t_max: float
    left_rate: Callable[[float], float] | None = None
    right_rate: Callable[[float], float] | None = None

    def __post_init__(self):
        if not 0 < self.t_min < self.t_max:
            raise ValueError("need 0 < t_min < t_max")
        ts = np.linspace(self.t_min, self.t_max, 65)
        lefts = np.array([self.left_fn(t) for t in ts])
        rights = np.array([self.right_fn(t) for t in ts])
        if np.any(np.diff(lefts) > 0) or np.any(np.diff(rights) < 0):
            raise ValueError("domain family is not increasing")
        if np.any(np.diff(rights) - np.diff(lefts) <= 0):
            raise ValueError("domain family must grow strictly")
        if np.any(rights <= lefts):
            raise ValueError("domain family contains an empty interval")

    @classmethod
    def about_midpoint(cls, interval: Interval, t_min_fraction: float = T_MIN_FRACTION) -> "DomainFamily":
        """``Omega_t = (c - t L/2, c + t L/2)`` for ``t`` in ``(t_min, 1]``."""
        c, half = interval.midpoint, 0.5 * interval.length
        return cls(lambda t: c - t * half, lambda t: c + t * half, t_min_fraction, 1.0,
                   lambda t: -half, lambda t: half)

    @classmethod
    def from_left(cls, interval: Interval, t_min_fraction: float = T_MIN_FRACTION) -> "DomainFamily":
        """``Omega_t = (a, a + t L)``: only the right endpoint moves."""
        a, length = interval.left, interval.length
        return cls(lambda t: a, lambda t: a + t * length, t_min_fraction, 1.0,
                   lambda t: 0.0, lambda t: length)

    def interval(self, t: float) -> Interval:
        return Interval(self.left_fn(t), self.right_fn(t))

    def velocities(self, t: float) -> tuple[float, float]:
        eps = 1e-6 * max(1.0, abs(t))
        if self.left_rate is not None:
            vl = float(self.left_rate(t))
        else:
            vl = (self.left_fn(t + eps) - self.left_fn(t - eps)) / (2 * eps)
        if self.right_rate is not None:
            vr = float(self.right_rate(t))
        else:
            vr = (self.right_fn(t + eps) - self.right_fn(t - eps)) / (2 * eps)
        return vl, vr

    @property
    def shrinks_to_point(self) -> bool:
        return self.interval(self.t_min).length < SHRINK_FLAG * self.interval(self.t_max).length


@dataclass(frozen=True)
class DefectResult:
    t: float
    defect: float
    multiplicity: int
    kernel: tuple[Trajectory, ...]
    matrix: np.ndarray


@dataclass(frozen=True)
class ConjugateReport:
    conjugate_points: tuple[CrossingRecord, ...]
    total_count: int
    morse_index_claim: int
    label: str
    small_t_certificate: bool
    excluded: tuple[CrossingRecord, ...] = ()
    table: tuple[tuple[float, float, int], ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "conjugate_points": [c.as_dict() for c in self.conjugate_points],
            "excluded_endpoint_points": [c.as_dict() for c in self.excluded],
            "total_count": self.total_count,
            "morse_index_claim": self.morse_index_claim,
            "small_t_certificate": self.small_t_certificate,
        }


def restricted_constraints(problem: SchroedingerProblem, sub: Interval) -> list[ConstraintFunction]:
    """Constraint functions viewed on ``sub``; evaluation is unchanged."""
    if not problem.interval.contains(sub):
        raise ValueError("subinterval lies outside the problem interval")
    return list(problem.constraints)


def _initial_parameters(m):
    # columns: u'(left), a_1..a_m ; u(left) = 0 and w(left) = 0
    y0 = np.zeros((2 + 2 * m, 1 + m))
    y0[1, 0] = 1.0
    for i in range(m):
        y0[2 + i, 1 + i] = 1.0
    return y0


def _condition_rows(end, m):
    mats = np.empty(end.shape[:-2] + (m + 1, m + 1))
    mats[..., :m, :] = end[..., 2 + m :, :]
    mats[..., m, :] = end[..., 0, :]
    return mats


def _family_steps(family, steps):
    return default_steps(family.interval(family.t_max).length) if steps is None else int(steps)


def defect_matrices(problem: SchroedingerProblem, ts, family: DomainFamily, steps: int | None = None) -> np.ndarray:
    """Condition matrices ``[w_i(right); u(right)]`` for a batch of ``t`` (spectral parameter 0).

    Also returns the full end states, used to scale the nullity test.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    steps = _family_steps(family, steps)
    lefts = np.array([family.left_fn(t) for t in ts])
    rights = np.array([family.right_fn(t) for t in ts])
    end = propagate(problem, 0.0, lefts, rights, _initial_parameters(problem.m), steps)
    return _condition_rows(end, problem.m), end


def _ratio(mats, ends):
    sv = np.linalg.svd(mats, compute_uv=False)
    full = np.linalg.norm(ends, 2, axis=(-2, -1))
    return sv[..., -1] / np.maximum(sv[..., 0], full)


def dirichlet_defect(problem: SchroedingerProblem, t: float, family: DomainFamily,
                     steps: int | None = None, tol: float = NULLITY_TOL) -> DefectResult:
    """Determinant and nullity of the constrained Dirichlet conditions on ``Omega_t``."""
    steps = _family_steps(family, steps)
    sub = family.interval(t)
    m = problem.m
    end = propagate(problem, 0.0, sub.left, sub.right, _initial_parameters(m), steps)[0]
    mat = _condition_rows(end, m)
    _, s, vt = np.linalg.svd(mat)
    # scale by the whole end state so a 1x1 condition (m = 0) can still vanish
    d = int(np.sum(s < tol * max(s[0], np.linalg.norm(end, 2))))
    kernel = []
    if d:
        y0 = np.zeros((2 + 2 * m, d))
        y0[1 : 2 + m] = vt[-d:].T
        _, traj = propagate(problem, 0.0, sub.left, sub.right, y0, steps, record=True)
        x = np.linspace(sub.left, sub.right, steps + 1)
        for j in range(d):
            tr = Trajectory(x, traj[0, :, :, j], 0.0)
            kernel.append(tr.scaled(1.0 / tr.sup_norm()))
    return DefectResult(float(t), float(np.linalg.det(mat)), d, tuple(kernel), mat)


def crossing_form_t(problem: SchroedingerProblem, t: float, family: DomainFamily, kernel: Trajectory) -> float:
    """Boundary crossing form ``-sum over ends of (d_nu u)^2 (X . nu)`` for one kernel element.

    ``X . nu`` is ``-left'(t)`` at the left end and ``right'(t)`` at the right.
    """
    return float(crossing_form_t_matrix(family, t, [kernel])[0, 0])


def crossing_form_t_matrix(family: DomainFamily, t: float, kernel) -> np.ndarray:
    vl, vr = family.velocities(t)
    us = [k.scaled(1.0 / k.sup_norm()) for k in kernel]
    dl = np.array([u.uprime[0] for u in us])
    dr = np.array([u.uprime[-1] for u in us])
    return -(np.outer(dl, dl) * (-vl) + np.outer(dr, dr) * vr)


def first_eigenvalue_bound(problem: SchroedingerProblem, sub: Interval) -> float:
    """Lower bound ``(pi/|sub|)^2 + inf V`` for the constrained Dirichlet spectrum on ``sub``."""
    lo, _ = problem.potential.bounds(sub)
    return (np.pi / sub.length) ** 2 + lo


def _record(problem, t, family, steps, note=""):
    res = dirichlet_defect(problem, t, family, steps)
    if res.multiplicity == 0:
        return None
    form = crossing_form_t_matrix(family, t, res.kernel)
    return CrossingRecord.from_form(t, form, CrossingKind.DOMAIN_SWEEP, note=note)


def scan(problem: SchroedingerProblem, family: DomainFamily | None = None, grid_points: int = DEFAULT_GRID,
         steps: int | None = None) -> ConjugateReport:
    """Locate constrained conjugate points on ``(t_min, t_max)`` and sum their multiplicities."""
    if problem.bc is not BoundaryCondition.DIRICHLET:
        raise ValueError("conjugate-point counting is implemented for the Dirichlet problem only")
    if grid_points < 128:
        raise ValueError("grid_points must be >= 128")
    family = DomainFamily.about_midpoint(problem.interval) if family is None else family
    steps = _family_steps(family, steps)
    m = problem.m

    ts = np.linspace(family.t_min, family.t_max, grid_points)
    mats, ends = defect_matrices(problem, ts, family, steps)
    values = np.linalg.det(mats)
    ratios = _ratio(mats, ends)

    def defect(t):
        return float(np.linalg.det(defect_matrices(problem, [t], family, steps)[0][0]))

    def ratio(t):
        return float(_ratio(*defect_matrices(problem, [t], family, steps))[0])

    found = []
    changed = np.flatnonzero(values[:-1] * values[1:] < 0)
    for i in changed:
        root = brentq(defect, ts[i], ts[i + 1], xtol=ROOT_XTOL)
        rec = _record(problem, root, family, steps)
        if rec is None:
            raise RuntimeError(f"sign change at t={root!r} without a detectable kernel")
        found.append(rec)

    # even-order zeros of the defect: refine local minima of |defect| and of the singular ratio
    flagged = set(changed) | set(changed + 1)
    for sampled, objective in ((np.abs(values), lambda t: abs(defect(t))), (ratios, ratio)):
        for i in _interior_minima(sampled, flagged):
            res = minimize_scalar(objective, bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                                  options={"xatol": ROOT_XTOL})
            t = float(res.x)
            if any(abs(t - c.parameter) <= 1e3 * ROOT_XTOL for c in found):
                continue
            if defect(t) * values[i] < 0:
                raise GridResolutionError(f"increase grid_points: two conjugate points inside [{ts[i - 1]}, {ts[i + 1]}]")
            rec = _record(problem, t, family, steps, note="even-order zero of the defect")
            if rec is None:
                continue
            if rec.dimension % 2:
                raise GridResolutionError(f"increase grid_points: unresolved conjugate points near t={t!r}")
            found.append(rec)

    if ratios[-1] < NULLITY_TOL or values[-1] == 0:
        rec = _record(problem, family.t_max, family, steps)
        if rec is not None:
            found.append(rec)

    found.sort(key=lambda c: c.parameter)
    kept = tuple(c for c in found if family.t_max - c.parameter > ENDPOINT_BAND)
    excluded = tuple(
        CrossingRecord(c.parameter, c.dimension, c.signature, c.kind, c.form_values,
                       "endpoint crossing - excluded from the t < t_max sum")
        for c in found if family.t_max - c.parameter <= ENDPOINT_BAND
    )
    total = sum(c.dimension for c in kept)
    certificate = first_eigenvalue_bound(problem, family.interval(family.t_min)) > 0
    # the first-eigenvalue bound stands in for |Omega_t| -> 0 below t_min
    label = "morse-index" if family.shrinks_to_point or certificate else "spectral-flow only"

    table = [(float(t), float(v), 0) for t, v in zip(ts, values)]
    for c in found:
        table.append((c.parameter, defect(c.parameter), c.dimension))
    table.sort()
    log.debug("scan of %d-constraint problem found %d conjugate points", m, total)
    return ConjugateReport(kept, total, total, label, certificate, excluded, tuple(table))
