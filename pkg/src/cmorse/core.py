"""Domain types shared by every index route.

Traces are stored in the fixed order ``(value_left, value_right,
normal_left, normal_right)`` with *outward* normal derivatives, so the
normal slot at the left endpoint holds ``-u'(left)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "MorseError",
    "BlowUpError",
    "ConstraintDegeneracyError",
    "Interval",
    "Potential",
    "ConstraintFunction",
    "BoundaryCondition",
    "SchroedingerProblem",
    "BoundaryTrace",
    "LagrangianPlane",
    "CrossingKind",
    "CrossingRecord",
    "symplectic_form",
    "intersection_dimension",
    "zero_mean_well",
]

FRAME_RANK_TOL = 1e-10
ISOTROPY_TOL = 1e-8
GRAM_RANK_TOL = 1e-10
WORKING_GRID = 2001


class MorseError(RuntimeError):
    """Base class for numerical failures raised by the toolkit."""


class BlowUpError(MorseError):
    def __init__(self, position: float):
        super().__init__(f"blow-up: non-finite state reached at x = {position:.6g}")
        self.position = position


class ConstraintDegeneracyError(MorseError):
    def __init__(self, rank: int, m: int, lam: float):
        super().__init__(
            f"constraint degeneracy: constraint map has rank {rank} < {m} at lambda = {lam!r}"
        )
        self.rank = rank
        self.lam = lam


@dataclass(frozen=True)
class Interval:
    left: float
    right: float

    def __post_init__(self):
        left, right = float(self.left), float(self.right)
        if not (np.isfinite(left) and np.isfinite(right)) or not left < right:
            raise ValueError(f"invalid interval: ({self.left}, {self.right})")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def length(self) -> float:
        return self.right - self.left

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.left + self.right)

    def contains(self, other: "Interval", slack: float = 1e-12) -> bool:
        pad = slack * self.length
        return self.left - pad <= other.left and other.right <= self.right + pad

    def grid(self, n: int = WORKING_GRID) -> np.ndarray:
        return np.linspace(self.left, self.right, n)


def _as_field(fn: Callable, x: np.ndarray) -> np.ndarray:
    # callables may return scalars for constant data
    return np.broadcast_to(np.asarray(fn(x), dtype=float), np.shape(x))


class Potential:
    """Pointwise potential ``V``; ``fn`` must accept numpy arrays."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], label: str = "custom"):
        self._fn = fn
        self.label = label

    def __call__(self, x) -> np.ndarray:
        return _as_field(self._fn, np.asarray(x, dtype=float))

    def __repr__(self):
        return f"Potential({self.label})"

    @classmethod
    def constant(cls, value: float) -> "Potential":
        value = float(value)
        return cls(lambda x: np.full(np.shape(x), value), label=f"constant({value:g})")

    @classmethod
    def from_table(cls, xs: Sequence[float], vs: Sequence[float]) -> "Potential":
        xs = np.asarray(xs, dtype=float)
        vs = np.asarray(vs, dtype=float)
        return cls(lambda x: np.interp(x, xs, vs), label="table")

    def bounds(self, interval: Interval, n: int = WORKING_GRID) -> tuple[float, float]:
        values = self(interval.grid(n))
        lo, hi = float(values.min()), float(values.max())
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("potential is unbounded on the sampling grid")
        return lo, hi


class ConstraintFunction:
    """Constraint function ``phi`` together with its derivative.

    The derivative is only used for diagnostics; when omitted a centred
    difference of ``fn`` is used.
    """

    def __init__(self, fn: Callable, deriv: Callable | None = None, label: str = "custom"):
        self._fn = fn
        self._deriv = deriv
        self.label = label

    def __call__(self, x) -> np.ndarray:
        return _as_field(self._fn, np.asarray(x, dtype=float))

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._deriv is not None:
            return _as_field(self._deriv, x)
        step = 1e-6 * np.maximum(1.0, np.abs(x))
        return (self(x + step) - self(x - step)) / (2 * step)

    def __repr__(self):
        return f"ConstraintFunction({self.label})"

    @classmethod
    def constant(cls, value: float = 1.0) -> "ConstraintFunction":
        value = float(value)
        return cls(
            lambda x: np.full(np.shape(x), value),
            lambda x: np.zeros(np.shape(x)),
            label=f"constant({value:g})",
        )

    @classmethod
    def from_table(cls, xs: Sequence[float], vs: Sequence[float]) -> "ConstraintFunction":
        xs = np.asarray(xs, dtype=float)
        vs = np.asarray(vs, dtype=float)
        slopes = np.diff(vs) / np.diff(xs)

        def deriv(x):
            idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
            return slopes[idx]

        return cls(lambda x: np.interp(x, xs, vs), deriv, label="table")


class BoundaryCondition(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @property
    def annihilated_rows(self) -> tuple[int, int]:
        """Trace slots that must vanish on the reference plane."""
        return (0, 1) if self is BoundaryCondition.DIRICHLET else (2, 3)


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class SchroedingerProblem:
    """``-u'' + V u`` on an interval, with a boundary condition and constraints."""

    interval: Interval
    potential: Potential
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    constraints: tuple[ConstraintFunction, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if isinstance(self.bc, str):
            object.__setattr__(self, "bc", BoundaryCondition(self.bc))
        if self.m:
            gram = self.gram_matrix()
            eig = np.linalg.eigvalsh(gram)
            if eig[0] <= GRAM_RANK_TOL * max(eig[-1], np.finfo(float).tiny):
                raise ValueError("constraint functions are linearly dependent on the working grid")

    @property
    def m(self) -> int:
        return len(self.constraints)

    def gram_matrix(self, n: int = WORKING_GRID) -> np.ndarray:
        x = self.interval.grid(n)
        w = _trapezoid_weights(n, self.interval.length / (n - 1))
        samples = np.array([c(x) for c in self.constraints]).reshape(self.m, n)
        return (samples * w) @ samples.T

    def unconstrained(self) -> "SchroedingerProblem":
        return SchroedingerProblem(self.interval, self.potential, self.bc, ())

    def with_constraints(self, constraints: Sequence[ConstraintFunction]) -> "SchroedingerProblem":
        return SchroedingerProblem(self.interval, self.potential, self.bc, tuple(constraints))

    def on(self, sub: Interval) -> "SchroedingerProblem":
        """The same operator and constraints restricted to ``sub``."""
        return SchroedingerProblem(sub, self.potential, self.bc, self.constraints)


def zero_mean_well(depth: float, constrained: bool = True, bc=BoundaryCondition.DIRICHLET):
    """``-u'' - depth*u`` on (-1, 1), optionally restricted to zero-mean functions."""
    constraints = (ConstraintFunction.constant(1.0),) if constrained else ()
    return SchroedingerProblem(Interval(-1.0, 1.0), Potential.constant(-depth), bc, constraints)


@dataclass(frozen=True)
class BoundaryTrace:
    value_left: float
    value_right: float
    normal_left: float
    normal_right: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("trace entries must be finite")

    @classmethod
    def from_cauchy_data(cls, u_left, du_left, u_right, du_right) -> "BoundaryTrace":
        return cls(float(u_left), float(u_right), -float(du_left), float(du_right))

    @classmethod
    def from_array(cls, values) -> "BoundaryTrace":
        return cls(*(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array([self.value_left, self.value_right, self.normal_left, self.normal_right])


def _omega(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # works column-wise on (4, ...) arrays
    return b[2] * a[0] + b[3] * a[1] - (a[2] * b[0] + a[3] * b[1])


def symplectic_form(a, b) -> float:
    """Boundary form ``sum over endpoints of u_a d_nu u_b - u_b d_nu u_a``."""
    a = a.as_array() if isinstance(a, BoundaryTrace) else np.asarray(a, dtype=float)
    b = b.as_array() if isinstance(b, BoundaryTrace) else np.asarray(b, dtype=float)
    return float(_omega(a, b))


class LagrangianPlane:
    """Isotropic subspace of the 4-dimensional trace space.

    The frame is orthonormalized on construction with an orientation-
    preserving QR step (positive diagonal in the triangular factor).
    """

    def __init__(self, frame, check_isotropy: bool = True):
        frame = np.asarray(frame, dtype=float)
        if frame.ndim == 1:
            frame = frame[:, None]
        if frame.shape[0] != 4 or frame.shape[1] not in (1, 2):
            raise ValueError(f"frame must be 4 x k with k in {{1, 2}}, got {frame.shape}")
        sv = np.linalg.svd(frame, compute_uv=False)
        if sv[-1] <= FRAME_RANK_TOL * sv[0]:
            raise ValueError("rank-deficient plane")
        q, r = np.linalg.qr(frame)
        q = q * np.sign(np.diag(r))
        self.frame = q
        self.frame.setflags(write=False)
        if check_isotropy and self.isotropy_defect() > ISOTROPY_TOL:
            raise ValueError(f"frame is not isotropic (defect {self.isotropy_defect():.3e})")

    @property
    def k(self) -> int:
        return self.frame.shape[1]

    def isotropy_defect(self) -> float:
        if self.k == 1:
            return 0.0
        return abs(float(_omega(self.frame[:, 0], self.frame[:, 1])))

    def beta_block(self, bc: BoundaryCondition) -> np.ndarray:
        return self.frame[list(bc.annihilated_rows), :]

    def __repr__(self):
        return f"LagrangianPlane(k={self.k})"


def intersection_dimension(plane: LagrangianPlane, bc: BoundaryCondition, tol: float = 1e-8) -> int:
    """Dimension of ``plane`` intersected with the Dirichlet or Neumann plane.

    The frame is orthonormal, so singular values of the annihilated rows
    are compared against ``tol`` directly (largest frame singular value 1).
    """
    if not isinstance(plane, LagrangianPlane):
        plane = LagrangianPlane(plane)
    sv = np.linalg.svd(plane.beta_block(bc), compute_uv=False)
    return int(np.sum(sv < tol))


class CrossingKind(enum.Enum):
    LAMBDA_SWEEP = "lambda"
    DOMAIN_SWEEP = "domain"


@dataclass(frozen=True)
class CrossingRecord:
    """An intersection with the reference plane at parameter ``parameter``.

    ``form_values`` holds the eigenvalues of the crossing form on the
    intersection; the signature is derived from them.
    """

    parameter: float
    dimension: int
    signature: tuple[int, int]
    kind: CrossingKind
    form_values: tuple[float, ...] = ()
    note: str = ""

    def __post_init__(self):
        n_plus, n_minus = self.signature
        if self.dimension < 1:
            raise ValueError("crossing dimension must be positive")
        if n_plus < 0 or n_minus < 0 or n_plus + n_minus > self.dimension:
            raise ValueError(f"invalid signature {self.signature} for dimension {self.dimension}")
        if n_plus != 0:
            raise ValueError(
                f"positive crossing direction at {self.kind.value}={self.parameter!r}; "
                "monotone paths only cross negatively"
            )

    @classmethod
    def from_form(cls, parameter, form_matrix, kind, tol=0.0, note=""):
        values = np.linalg.eigvalsh(np.atleast_2d(form_matrix))
        sig = (int(np.sum(values > tol)), int(np.sum(values < -tol)))
        return cls(float(parameter), len(values), sig, kind, tuple(float(v) for v in values), note)

    def as_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "dimension": self.dimension,
            "signature": list(self.signature),
            "form_values": list(self.form_values),
            "kind": self.kind.value,
            "note": self.note,
        }
