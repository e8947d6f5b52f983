"""Shooting construction of the constrained solution space on a subinterval.

Solutions of ``L u = lam u + sum_i a_i phi_i`` are integrated together with
the constant multipliers ``a_i`` and the running constraint integrals
``w_i(x) = int_left^x u phi_i``.  Because the extended system is linear, the
constrained space is the null space of the small matrix mapping initial
parameters ``(u(left), u'(left), a)`` to ``w(right)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rk4 import rk4_extended
from .core import (
    BlowUpError,
    BoundaryCondition,
    BoundaryTrace,
    ConstraintDegeneracyError,
    Interval,
    LagrangianPlane,
    SchroedingerProblem,
)

__all__ = [
    "STEPS_PER_UNIT",
    "default_steps",
    "ExtendedState",
    "Trajectory",
    "ConstrainedSolutionBasis",
    "propagate",
    "integrate_extended",
    "constrained_basis",
    "oriented_null_space",
    "trace_plane",
    "bordered_matrices",
]

STEPS_PER_UNIT = 2048
MIN_STEPS = 16
CONSTRAINT_RANK_TOL = 1e-10


def default_steps(length: float, per_unit: int = STEPS_PER_UNIT) -> int:
    steps = max(MIN_STEPS, int(np.ceil(per_unit * length)))
    return steps + steps % 2


@dataclass(frozen=True)
class ExtendedState:
    u: float
    uprime: float
    multipliers: tuple[float, ...] = ()
    accumulators: tuple[float, ...] = ()

    def as_vector(self, m: int) -> np.ndarray:
        a = np.zeros(m) if not self.multipliers else np.asarray(self.multipliers, float)
        w = np.zeros(m) if not self.accumulators else np.asarray(self.accumulators, float)
        if a.shape != (m,) or w.shape != (m,):
            raise ValueError(f"expected {m} multipliers and accumulators")
        return np.concatenate([[self.u, self.uprime], a, w])


@dataclass(frozen=True)
class Trajectory:
    """One sampled solution of the extended system."""

    x: np.ndarray
    states: np.ndarray  # (steps + 1, 2 + 2m)
    lam: float

    @property
    def m(self) -> int:
        return (self.states.shape[1] - 2) // 2

    @property
    def u(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def uprime(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def multipliers(self) -> np.ndarray:
        return self.states[0, 2 : 2 + self.m]

    @property
    def accumulators(self) -> np.ndarray:
        return self.states[:, 2 + self.m :]

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.u)))

    def trace(self) -> BoundaryTrace:
        return BoundaryTrace.from_cauchy_data(self.u[0], self.uprime[0], self.u[-1], self.uprime[-1])

    def scaled(self, factor: float) -> "Trajectory":
        return Trajectory(self.x, self.states * factor, self.lam)

    def combine(self, other: "Trajectory", a: float, b: float) -> "Trajectory":
        return Trajectory(self.x, a * self.states + b * other.states, self.lam)


@dataclass(frozen=True)
class ConstrainedSolutionBasis:
    """Basis of the constrained solution space at ``lam`` on ``subinterval``.

    ``params`` holds the initial parameters ``(u, u', a_1..a_m)`` of each
    basis element as columns, already scaled like the trajectories.
    """

    lam: float
    subinterval: Interval
    basis: tuple[Trajectory, ...]
    params: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    def element(self, coeffs) -> Trajectory:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coefficients")
        states = sum(c * t.states for c, t in zip(coeffs, self.basis))
        return Trajectory(self.basis[0].x, states, self.lam)


def _sample_coefficients(problem, lam, left, right, steps):
    lam, left, right = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (lam, left, right))
    lam, left, right = np.broadcast_arrays(lam, left, right)
    h = (right - left) / steps
    x = left[:, None] + 0.5 * h[:, None] * np.arange(2 * steps + 1)[None, :]
    q = np.ascontiguousarray(problem.potential(x) - lam[:, None])
    m = problem.m
    phi = np.empty((m,) + x.shape)
    for i, c in enumerate(problem.constraints):
        phi[i] = c(x)
    return q, phi, np.ascontiguousarray(h), left


def propagate(problem: SchroedingerProblem, lam, left, right, y0, steps: int, record: bool = False):
    """Batched RK4 run; ``lam``, ``left``, ``right`` broadcast to one batch axis.

    ``y0`` has shape ``(d, k)`` or ``(nb, d, k)``.  Returns the end states
    ``(nb, d, k)`` and, with ``record``, the full samples ``(nb, steps+1, d, k)``.
    """
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be >= {MIN_STEPS}")
    q, phi, h, lefts = _sample_coefficients(problem, lam, left, right, steps)
    nb = q.shape[0]
    y0 = np.asarray(y0, dtype=float)
    if y0.ndim == 1:
        y0 = y0[:, None]
    y0 = np.ascontiguousarray(np.broadcast_to(y0, (nb,) + y0.shape[-2:]))
    if y0.shape[1] != 2 + 2 * problem.m:
        raise ValueError(f"state dimension must be {2 + 2 * problem.m}")
    traj = np.empty((nb, steps + 1) + y0.shape[1:]) if record else np.empty((1, 1, 1, 1))
    fail = np.empty(nb, dtype=np.int64)
    end = rk4_extended(q, phi, h, y0, record, traj, fail)
    bad = np.flatnonzero(fail >= 0)
    if bad.size:
        b = bad[0]
        raise BlowUpError(float(lefts[b] + fail[b] * h[b]))
    return (end, traj) if record else end


def integrate_extended(problem, lam: float, sub: Interval, init, steps: int | None = None) -> Trajectory:
    """Integrate one extended state across ``sub`` on ``steps`` uniform steps."""
    steps = default_steps(sub.length) if steps is None else int(steps)
    if isinstance(init, ExtendedState):
        y0 = init.as_vector(problem.m)
    else:
        y0 = np.asarray(init, dtype=float)
    _, traj = propagate(problem, lam, sub.left, sub.right, y0[:, None], steps, record=True)
    x = np.linspace(sub.left, sub.right, steps + 1)
    return Trajectory(x, traj[0, :, :, 0], float(lam))


def oriented_null_space(W: np.ndarray, lam: float = float("nan")) -> np.ndarray:
    """Orthonormal basis of ker W, oriented so that ``det[N, W^T] > 0``.

    The orientation makes determinants built from the basis continuous in
    the spectral parameter, which sign-change root finding relies on.
    """
    m, n = W.shape
    if m == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(W)
    rank = int(np.sum(s > CONSTRAINT_RANK_TOL * s[0])) if s[0] > 0 else 0
    if rank < m:
        raise ConstraintDegeneracyError(rank, m, lam)
    null = vt[m:].T.copy()
    if np.linalg.det(np.hstack([null, W.T])) < 0:
        null[:, -1] *= -1
    return null


def _parameter_identity(m: int) -> np.ndarray:
    y0 = np.zeros((2 + 2 * m, 2 + m))
    y0[: 2 + m, :] = np.eye(2 + m)
    return y0


def constrained_basis(problem: SchroedingerProblem, lam: float, sub: Interval | None = None,
                      steps: int | None = None) -> ConstrainedSolutionBasis:
    """Basis of solutions with ``int_sub u phi_i = 0`` for every constraint.

    Raises ``ConstraintDegeneracyError`` when the constraint map loses rank;
    callers decide whether to perturb ``lam``.
    """
    sub = problem.interval if sub is None else sub
    steps = default_steps(sub.length) if steps is None else int(steps)
    m = problem.m
    end = propagate(problem, lam, sub.left, sub.right, _parameter_identity(m), steps)[0]
    null = oriented_null_space(end[2 + m :, :], lam)
    y0 = np.zeros((2 + 2 * m, null.shape[1]))
    y0[: 2 + m] = null
    _, traj = propagate(problem, lam, sub.left, sub.right, y0, steps, record=True)
    x = np.linspace(sub.left, sub.right, steps + 1)
    basis = []
    params = null.copy()
    for j in range(null.shape[1]):
        t = Trajectory(x, traj[0, :, :, j], float(lam))
        scale = 1.0 / t.sup_norm()
        basis.append(t.scaled(scale))
        params[:, j] *= scale
    return ConstrainedSolutionBasis(float(lam), sub, tuple(basis), params)


def trace_plane(basis: ConstrainedSolutionBasis) -> LagrangianPlane:
    if basis.dim != 2:
        raise ValueError(f"non-generic solution space (dim {basis.dim})")
    frame = np.column_stack([t.trace().as_array() for t in basis.basis])
    return LagrangianPlane(frame)


def bordered_matrices(problem: SchroedingerProblem, lams, sub: Interval | None = None,
                      steps: int | None = None) -> np.ndarray:
    """Square matrices ``[beta rows; constraint map]`` for a batch of ``lams``.

    Each is ``(2+m) x (2+m)``; it is singular exactly when ``lam`` is an
    eigenvalue of the constrained operator with the problem's boundary
    condition.  The first two rows are the trace slots annihilated by the
    boundary plane, written as linear functionals of the initial parameters.
    """
    sub = problem.interval if sub is None else sub
    steps = default_steps(sub.length) if steps is None else int(steps)
    m = problem.m
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    end = propagate(problem, lams, sub.left, sub.right, _parameter_identity(m), steps)
    mats = np.zeros((len(lams), 2 + m, 2 + m))
    if problem.bc is BoundaryCondition.DIRICHLET:
        mats[:, 0, 0] = 1.0
        mats[:, 1, :] = end[:, 0, :]
    else:
        mats[:, 0, 1] = -1.0
        mats[:, 1, :] = end[:, 1, :]
    mats[:, 2:, :] = end[:, 2 + m :, :]
    return mats
