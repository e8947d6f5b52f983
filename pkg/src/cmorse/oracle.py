"""Independent reference computations used to check the index routes.

Nothing here shares code with the shooting or finite-difference paths:
root counts come from the closed-form secular equations of the constant
well on (-1, 1), eigenvalue counts from a plain Jacobi rotation sweep.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RootMode",
    "RootCountQuery",
    "tan_roots",
    "secular_roots",
    "count_roots",
    "jacobi_eigenvalues",
    "dense_negative_count",
    "quadrature",
]

GUARD = 1e-9
BRANCH_EPS = 1e-9


class RootMode(enum.Enum):
    CONSTRAINED_DIRICHLET = "constrained-dirichlet"
    UNCONSTRAINED_DIRICHLET = "unconstrained-dirichlet"
    UNCONSTRAINED_NEUMANN = "unconstrained-neumann"


@dataclass(frozen=True)
class RootCountQuery:
    C: float
    mode: RootMode = RootMode.CONSTRAINED_DIRICHLET

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")


def _bisect(f, a, b, tol=1e-15):
    fa = f(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fa * fm <= 0:
            b = mid
        else:
            a, fa = mid, fm
        if b - a <= tol * max(1.0, abs(a)):
            break
    return 0.5 * (a + b)


def tan_roots(upper: float) -> list[float]:
    """Positive roots of ``tan g = g`` below ``upper`` (one per branch)."""
    roots = []
    k = 1
    f = lambda g: np.sin(g) - g * np.cos(g)  # same zeros, no pole
    while k * np.pi < upper:
        lo, hi = k * np.pi + BRANCH_EPS, (k + 0.5) * np.pi - BRANCH_EPS
        root = _bisect(f, lo, hi)
        if root < upper:
            roots.append(root)
        k += 1
    return roots


def secular_roots(upper: float, mode: RootMode) -> list[float]:
    """All ``g`` in (0, upper) at which the chosen eigenfunction exists.

    For Neumann the constant mode ``g = 0`` is included.
    """
    multiples = [k * np.pi for k in range(1, int(upper / np.pi) + 2) if k * np.pi < upper]
    if mode is RootMode.CONSTRAINED_DIRICHLET:
        extra = tan_roots(upper)
    elif mode is RootMode.UNCONSTRAINED_DIRICHLET:
        extra = [(k - 0.5) * np.pi for k in range(1, int(upper / np.pi) + 2) if (k - 0.5) * np.pi < upper]
    else:
        extra = [0.0] + [(k - 0.5) * np.pi for k in range(1, int(upper / np.pi) + 2)
                         if (k - 0.5) * np.pi < upper]
    return sorted(multiples + extra)


def count_roots(query: RootCountQuery) -> int:
    """Negative-eigenvalue count of ``-u'' - C u`` on (-1, 1) from its secular equation."""
    g = float(np.sqrt(query.C))
    near = secular_roots(g + 1.0, query.mode)
    close = [r for r in near if abs(r - g) <= GUARD]
    if close:
        raise ValueError(
            f"sqrt(C) = {g!r} is within {GUARD} of a root {close[0]!r}; perturb C by ~1e-6"
        )
    return sum(1 for r in near if r < g)


def _round_robin(n: int):
    # Brent-Luk ordering: n-1 rounds of n/2 disjoint pairs
    players = list(range(n + (n % 2)))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        rounds.append([(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n])
        players = [players[0]] + [players[-1]] + players[1:-1]
    return [(np.array([p for p, _ in r]), np.array([q for _, q in r])) for r in rounds]


def jacobi_eigenvalues(matrix, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues by cyclic Jacobi rotations, disjoint pairs applied together.

    Stops once the off-diagonal Frobenius norm is below ``tol`` times the
    Frobenius norm of the input.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("square matrix required")
    scale = np.linalg.norm(a)
    if n == 0:
        return np.zeros(0)
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-10 * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    if n == 1 or scale == 0:
        return np.sort(np.diag(a).copy())
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            with np.errstate(over="ignore", divide="ignore"):
                # a huge theta means a negligible rotation; t -> 0 is the right limit
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0] = 1.0
            c = 1 / np.sqrt(t * t + 1)
            s = t * c
            rows_p, rows_q = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
            a[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            cols_p, cols_q = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cols_p * c - cols_q * s
            a[:, q] = cols_p * s + cols_q * c
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(a).copy())


def dense_negative_count(matrix) -> int:
    a = np.asarray(matrix, dtype=float)
    if a.shape[0] > 400:
        raise ValueError("dense oracle limited to n <= 400")
    return int(np.sum(jacobi_eigenvalues(a) < 0))


def quadrature(samples, x=None, dx: float | None = None) -> float:
    """Composite Simpson rule on a uniform grid with an odd number of points."""
    y = np.asarray(samples, dtype=float)
    n = y.shape[-1]
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson needs an odd number (>= 3) of points, got {n}")
    if dx is None:
        if x is None:
            raise ValueError("pass either x or dx")
        x = np.asarray(x, dtype=float)
        steps = np.diff(x)
        dx = steps.mean()
        if np.max(np.abs(steps - dx)) > 1e-9 * abs(dx) * max(1, n):
            raise ValueError("grid is not uniform")
    total = y[..., 0] + y[..., -1] + 4 * y[..., 1:-1:2].sum(axis=-1) + 2 * y[..., 2:-1:2].sum(axis=-1)
    return total * dx / 3
