"""Constraint-matrix route: ``M_ij(lam) = <(L - lam)^{-1} phi_i, phi_j>``.

The number of negative eigenvalues of ``M(lam)`` as ``lam -> 0-`` equals
``n(L) - n(L_c)``.  Resolvents are computed by shooting (variation of
parameters) so that this route shares nothing with the finite-difference
count it is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BoundaryCondition, ConstraintFunction, MorseError, SchroedingerProblem
from .maslov import lambda_infinity
from .oracle import jacobi_eigenvalues, quadrature
from .shooting import Trajectory, default_steps, propagate

__all__ = [
    "ResolventPoleError",
    "NoStabilizationError",
    "ConstraintMatrixSample",
    "IndexLimitReport",
    "resolvent_apply",
    "resolvent_residual",
    "constraint_matrix",
    "default_lambda_sequence",
    "index_limit",
]

POLE_TOL = 1e-8
STABLE_RUN = 3
MIN_SAMPLES = 4
SMALLEST_LAMBDA_REL = 1e-4


class ResolventPoleError(MorseError):
    def __init__(self, lam, distance):
        super().__init__(f"resolvent pole: lambda={lam!r} is {distance:.2e} from an eigenvalue")
        self.lam = lam


class NoStabilizationError(MorseError):
    def __init__(self, trail):
        super().__init__(f"no stabilization; negative counts {[n for _, n in trail]}")
        self.trail = trail


@dataclass(frozen=True)
class ConstraintMatrixSample:
    lam: float
    matrix: np.ndarray
    negative_count: int
    eigenvalues: np.ndarray
    asymmetry: float = 0.0

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "matrix": self.matrix.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "negative_count": self.negative_count,
            "asymmetry": self.asymmetry,
        }


@dataclass(frozen=True)
class IndexLimitReport:
    limit: int
    samples: tuple[ConstraintMatrixSample, ...]
    poles: tuple[float, ...] = ()
    rule: str = field(
        default=f"last {STABLE_RUN} counts equal, smallest |lambda| <= {SMALLEST_LAMBDA_REL:g}*|lambda_inf|"
    )

    def eigenvalue_trails(self) -> np.ndarray:
        return np.array([s.eigenvalues for s in self.samples])

    def as_dict(self) -> dict:
        return {
            "limit": self.limit,
            "rule": self.rule,
            "poles_skipped": list(self.poles),
            "samples": [s.as_dict() for s in self.samples],
        }


def _boundary_functional(problem, end):
    # free-parameter column, its boundary value, and the particular column's
    if problem.bc is BoundaryCondition.DIRICHLET:
        return 1, end[..., 0, 1], end[..., 0, 2]
    return 0, end[..., 1, 0], end[..., 1, 2]


def resolvent_apply(problem: SchroedingerProblem, lam: float, rhs: ConstraintFunction,
                    steps: int | None = None) -> Trajectory:
    """Solve ``(L - lam) u = rhs`` with the problem's boundary condition.

    The particular solution carries multiplier 1 on ``rhs``; one homogeneous
    solution already satisfies the left boundary condition and its amount is
    fixed by the right one.  Near an eigenvalue of the unconstrained operator
    a Newton estimate of the distance is used to refuse the solve.
    """
    iv = problem.interval
    steps = default_steps(iv.length) if steps is None else int(steps)
    aux = SchroedingerProblem(iv, problem.potential, problem.bc, (rhs,))
    y0 = np.zeros((4, 3))
    y0[0, 0] = y0[1, 1] = y0[2, 2] = 1.0
    dl = 1e-5 * max(1.0, abs(lam))
    end = propagate(aux, [lam, lam - dl, lam + dl], iv.left, iv.right, y0, steps)
    col, g, gp = _boundary_functional(problem, end)
    slope = (g[2] - g[1]) / (2 * dl)
    distance = abs(g[0] / slope) if slope != 0 else np.inf
    if distance < POLE_TOL:
        raise ResolventPoleError(lam, distance)
    coeff = -gp[0] / g[0]
    start = np.zeros(4)
    start[col] = coeff
    start[2] = 1.0
    _, traj = propagate(aux, lam, iv.left, iv.right, start[:, None], steps, record=True)
    x = np.linspace(iv.left, iv.right, steps + 1)
    return Trajectory(x, traj[0, :, :, 0], float(lam))


def resolvent_residual(problem: SchroedingerProblem, lam: float, rhs: ConstraintFunction,
                       solution: Trajectory) -> float:
    """Relative max-norm residual of ``-u'' + (V - lam) u - rhs`` on interior nodes.

    ``u''`` comes from a fourth-order difference of the sampled ``u'``.
    """
    x, du = solution.x, solution.uprime
    h = solution.h
    d2 = (du[:-4] - 8 * du[1:-3] + 8 * du[3:-1] - du[4:]) / (12 * h)
    xi = x[2:-2]
    res = -d2 + (problem.potential(xi) - lam) * solution.u[2:-2] - rhs(xi)
    return float(np.max(np.abs(res)) / max(np.max(np.abs(rhs(x))), 1e-300))


def constraint_matrix(problem: SchroedingerProblem, lam: float, steps: int | None = None) -> ConstraintMatrixSample:
    m = problem.m
    if m == 0:
        return ConstraintMatrixSample(float(lam), np.zeros((0, 0)), 0, np.zeros(0))
    sols = [resolvent_apply(problem, lam, phi, steps) for phi in problem.constraints]
    x = sols[0].x
    phis = [phi(x) for phi in problem.constraints]
    raw = np.array([[quadrature(s.u * p, dx=sols[0].h) for p in phis] for s in sols])
    asym = float(np.max(np.abs(raw - raw.T)) / max(np.max(np.abs(raw)), 1e-300))
    mat = 0.5 * (raw + raw.T)
    eig = jacobi_eigenvalues(mat)
    return ConstraintMatrixSample(float(lam), mat, int(np.sum(eig < 0)), eig, asym)


def default_lambda_sequence(count: int = 16) -> list[float]:
    return [-0.1 * 2.0**-k for k in range(count)]


def index_limit(problem: SchroedingerProblem, lambda_sequence=None, steps: int | None = None) -> IndexLimitReport:
    """``lim_{lam -> 0-} n(M(lam))`` by the stabilization rule in ``IndexLimitReport.rule``."""
    if problem.m == 0:
        return IndexLimitReport(0, ())
    seq = default_lambda_sequence() if lambda_sequence is None else list(lambda_sequence)
    if any(lam >= 0 for lam in seq):
        raise ValueError("lambda_sequence must be negative")
    seq = sorted(seq)  # most negative first, approaching 0-
    samples, poles = [], []
    for lam in seq:
        try:
            samples.append(constraint_matrix(problem, lam, steps))
        except ResolventPoleError:
            poles.append(lam)
    trail = [(s.lam, s.negative_count) for s in samples]
    if len(samples) < MIN_SAMPLES:
        raise NoStabilizationError(trail)
    tail = [n for _, n in trail[-STABLE_RUN:]]
    scale = abs(lambda_infinity(problem))
    if len(set(tail)) != 1 or abs(samples[-1].lam) > SMALLEST_LAMBDA_REL * scale:
        raise NoStabilizationError(trail)
    return IndexLimitReport(tail[-1], tuple(samples), tuple(poles))
