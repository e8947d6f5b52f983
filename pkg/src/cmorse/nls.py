"""Power-law ground states and the conjugate-point function of their constrained operator.

For ``f(s) = (p+1) s^p`` the equation ``phi'' + f(phi^2) phi + omega phi = 0``
has the even, positive, decaying solution
``phi(x) = |omega|^{1/(2p)} sech^{1/p}(p sqrt|omega| x)``.  All x- and
omega-derivatives used below are closed forms of that expression.

``c(t) = -phi^2 phi_omega / phi_x + int_{-inf}^t 2 phi phi_omega`` vanishes
exactly at the conjugate points of ``L_+`` restricted to ``{phi}^perp`` on
``(-inf, t)``; its limit at ``+inf`` is the slope ``d/domega int phi^2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import WORKING_GRID
from .oracle import quadrature

__all__ = [
    "PowerLawNonlinearity",
    "SolitonProfile",
    "Verdict",
    "PropertyCheck",
    "PropertyReport",
    "soliton",
    "g_of",
    "truncation_radius",
    "tail_radius",
    "c_function",
    "c_derivative",
    "c_table",
    "profile_residuals",
    "property_suite",
    "vk_slope",
    "count_positive_roots",
    "verdict",
    "LATTICE",
]

DELTA = 1e-3
DIVERGENCE_PROBE = 1e-6
DIVERGENCE_THRESHOLD = 1e3
TAIL_REL = 1e-14
ROOT_TAIL_REL = 1e-10
QUAD_POINTS = 20001
VERDICT_TOL = 1e-6

# (p, omega) pairs on which every profile identity is checked
LATTICE = tuple((p, w) for p in (0.5, 1.0, 2.0, 3.0, 4.0) for w in (-0.5, -1.0, -2.0))


@dataclass(frozen=True)
class PowerLawNonlinearity:
    """``f(s) = (p+1) s^p``."""

    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("p must be positive")

    def f(self, s):
        return (self.p + 1) * np.asarray(s, dtype=float) ** self.p

    def f_prime(self, s):
        return self.p * (self.p + 1) * np.asarray(s, dtype=float) ** (self.p - 1)


def g_of(nonlinearity: PowerLawNonlinearity, u: float) -> float:
    """``g(u) = u^{-1} int_0^u f``, which is ``u^p`` for the power law."""
    if not u > 0:
        raise ValueError("g is defined for u > 0")
    return float(u**nonlinearity.p)


def _sech(y):
    a = np.exp(-np.abs(y))
    return 2 * a / (1 + a * a)


@dataclass(frozen=True)
class SolitonProfile:
    """Closed-form ground state for ``f(s) = (p+1) s^p`` at frequency ``omega < 0``."""

    p: float
    omega: float

    @property
    def nonlinearity(self) -> PowerLawNonlinearity:
        return PowerLawNonlinearity(self.p)

    @property
    def rate(self) -> float:
        return self.p * np.sqrt(-self.omega)

    @property
    def amplitude(self) -> float:
        return (-self.omega) ** (1 / (2 * self.p))

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        b = self.rate
        s = _sech(b * x)
        tau = np.tanh(b * x)
        return x, b, s, tau

    def phi(self, x):
        _, _, s, _ = self._parts(x)
        return self.amplitude * s ** (1 / self.p)

    def phi_x(self, x):
        _, b, _, tau = self._parts(x)
        return -(b / self.p) * self.phi(x) * tau

    def _curvature(self, x):
        # phi_xx / phi
        _, b, s, tau = self._parts(x)
        p = self.p
        return (b / p) ** 2 * tau**2 - (b**2 / p) * s**2

    def phi_xx(self, x):
        return self.phi(x) * self._curvature(x)

    def phi_xxx(self, x):
        _, b, s, tau = self._parts(x)
        p = self.p
        dr = 2 * b**3 * tau * s**2 * (1 / p**2 + 1 / p)
        return self.phi_x(x) * self._curvature(x) + self.phi(x) * dr

    def _q(self, x):
        # phi_omega = phi q / (2 p |omega|) with q = b x tanh(b x) - 1
        x, b, s, tau = self._parts(x)
        q = b * x * tau - 1
        dq = b * tau + b**2 * x * s**2
        d2q = 2 * b**2 * s**2 - 2 * b**3 * x * s**2 * tau
        return q, dq, d2q, 2 * self.p * (-self.omega)

    def phi_omega(self, x):
        q, _, _, k = self._q(x)
        return self.phi(x) * q / k

    def phi_omega_x(self, x):
        q, dq, _, k = self._q(x)
        return (self.phi_x(x) * q + self.phi(x) * dq) / k

    def phi_omega_xx(self, x):
        q, dq, d2q, k = self._q(x)
        return (self.phi_xx(x) * q + 2 * self.phi_x(x) * dq + self.phi(x) * d2q) / k

    def l_plus(self, u, u_xx, x):
        """``L_+ u = -u'' - f(phi^2) u - 2 f'(phi^2) phi^2 u - omega u`` from samples."""
        p = self.p
        well = (p + 1) * (2 * p + 1) * self.phi(x) ** (2 * p)
        return -u_xx - well * u - self.omega * u


def soliton(p: float, omega: float) -> SolitonProfile:
    if not p > 0:
        raise ValueError("p must be positive")
    if omega >= 0:
        raise ValueError(f"no decaying state for omega = {omega!r} >= 0")
    return SolitonProfile(float(p), float(omega))


def _radius_where(profile: SolitonProfile, rel: float) -> float:
    # phi^2/phi(0)^2 = sech^{2/p}(b x) = rel
    y = np.arccosh(rel ** (-profile.p / 2))
    return float(y / profile.rate)


def truncation_radius(profile: SolitonProfile, rel: float = TAIL_REL) -> float:
    """``X >= 20/sqrt|omega|``, doubled until ``phi(X)^2 < rel * phi(0)^2``."""
    x = 20 / np.sqrt(-profile.omega)
    floor = rel * profile.amplitude**2
    while profile.phi(x) ** 2 >= floor:
        x *= 2
    return float(x)


def tail_radius(profile: SolitonProfile, rel: float) -> float:
    """The ``T > 0`` at which ``phi(T)^2 = rel * phi(0)^2``."""
    return _radius_where(profile, rel)


def _tail_integral(profile, t, x_max, points):
    if t <= -x_max:
        return 0.0
    x = np.linspace(-x_max, t, points)
    return float(quadrature(2 * profile.phi(x) * profile.phi_omega(x), dx=x[1] - x[0]))


def c_function(profile: SolitonProfile, t: float, delta: float = DELTA, points: int = QUAD_POINTS) -> float:
    """Conjugate-point function at ``t``; refuses ``|t| <= delta`` where ``phi_x`` vanishes."""
    if abs(t) <= delta:
        raise ValueError(f"t = {t!r} lies in the singularity window |t| <= {delta}")
    x_max = truncation_radius(profile)
    boundary = -profile.phi(t) ** 2 * profile.phi_omega(t) / profile.phi_x(t)
    return float(boundary + _tail_integral(profile, t, x_max, points))


def c_derivative(profile: SolitonProfile, t) -> np.ndarray:
    """``c'(t) = phi^4 / (2 phi_x^2)``."""
    return profile.phi(t) ** 4 / (2 * profile.phi_x(t) ** 2)


def c_table(profile: SolitonProfile, t_max: float, samples: int = 401,
            delta: float = DELTA) -> tuple[np.ndarray, np.ndarray]:
    """``c`` on ``[-t_max, -delta) U (delta, t_max]`` with ``samples`` points per side."""
    if t_max <= delta:
        raise ValueError("t_max must exceed the singularity window")
    right = np.linspace(delta, t_max, samples + 1)[1:]
    ts = np.concatenate([-right[::-1], right])
    return ts, np.array([c_function(profile, t, delta) for t in ts])


def vk_slope(p: float, omega: float) -> float:
    """``d/domega int phi^2`` as the quadrature of ``2 phi phi_omega`` over the truncated line."""
    prof = soliton(p, omega)
    x_max = truncation_radius(prof)
    return _tail_integral(prof, x_max, x_max, 2 * QUAD_POINTS - 1)


def profile_residuals(profile: SolitonProfile, n: int = WORKING_GRID) -> dict[str, float]:
    """Max-norm defects of the identities the closed form must satisfy on ``[-X, X]``."""
    x_max = truncation_radius(profile)
    x = np.linspace(-x_max, x_max, n)
    phi, phi_x, phi_xx = profile.phi(x), profile.phi_x(x), profile.phi_xx(x)
    p, omega = profile.p, profile.omega
    g = phi ** (2 * p)
    return {
        "ode": float(np.max(np.abs(phi_xx + (p + 1) * g * phi + omega * phi))),
        "conserved": float(np.max(np.abs(phi_x**2 + (omega + g) * phi**2))),
        "evenness": float(np.max(np.abs(phi - profile.phi(-x)))),
        "min_phi": float(np.min(phi)),
        "l_plus_phi_x": float(np.max(np.abs(profile.l_plus(phi_x, profile.phi_xxx(x), x)))),
        "l_plus_phi_omega": float(
            np.max(np.abs(profile.l_plus(profile.phi_omega(x), profile.phi_omega_xx(x), x) - phi))
        ),
        "wronskian": float(
            np.max(np.abs(profile.phi_omega(x) * phi_xx - profile.phi_omega_x(x) * phi_x - 0.5 * phi**2))
        ),
    }


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


@dataclass(frozen=True)
class PropertyReport:
    p: float
    omega: float
    checks: tuple[PropertyCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> PropertyCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {c.name: {"passed": c.passed, "value": c.value, "tolerance": c.tolerance, "detail": c.detail}
                for c in self.checks}


def property_suite(profile: SolitonProfile, delta: float = DELTA,
                   divergence_probe: float = DIVERGENCE_PROBE) -> PropertyReport:
    """Check the qualitative shape of ``c`` and the Wronskian identity.

    The two divergence checks near ``t = 0`` are evaluated at
    ``divergence_probe`` rather than at ``delta``: the blow-up rate is
    ``phi(0)^2 / (2 p^2 omega^2 |t|)``, which stays below the threshold at
    ``|t| = 1e-3`` for several lattice points.
    """
    t_tail = tail_radius(profile, TAIL_REL)
    slope = vk_slope(profile.p, profile.omega)
    checks = []

    left = c_function(profile, -t_tail, delta)
    checks.append(PropertyCheck("left_tail_limit", abs(left) < 1e-6, left, 1e-6,
                                f"|c(-T)| at T = {t_tail:.6g}"))

    probe_window = 0.5 * divergence_probe
    c_minus = c_function(profile, -divergence_probe, probe_window)
    c_plus = c_function(profile, divergence_probe, probe_window)
    checks.append(PropertyCheck("left_divergence", c_minus > DIVERGENCE_THRESHOLD, c_minus,
                                DIVERGENCE_THRESHOLD, f"c(-{divergence_probe:g})"))
    checks.append(PropertyCheck("right_divergence", c_plus < -DIVERGENCE_THRESHOLD, c_plus,
                                DIVERGENCE_THRESHOLD, f"c(+{divergence_probe:g})"))

    right = c_function(profile, t_tail, delta)
    checks.append(PropertyCheck("right_tail_limit", abs(right - slope) < 1e-6, right - slope, 1e-6,
                                f"c(T) - slope with slope = {slope:.10g}"))

    scale = 1 / np.sqrt(-profile.omega)
    samples = np.concatenate([-np.linspace(0.2, 2.0, 10), np.linspace(0.2, 2.0, 10)]) * scale
    worst = 0.0
    positive = True
    for t in samples:
        exact = float(c_derivative(profile, t))
        eps = 1e-4 * scale
        fd = (c_function(profile, t + eps, delta) - c_function(profile, t - eps, delta)) / (2 * eps)
        worst = max(worst, abs(fd - exact) / abs(exact))
        positive = positive and exact > 0
    checks.append(PropertyCheck("monotone", positive and worst < 1e-4, worst, 1e-4,
                                "max relative gap between phi^4/(2 phi_x^2) and a central difference of c"))

    wr = profile_residuals(profile)["wronskian"]
    checks.append(PropertyCheck("wronskian", wr < 1e-8, wr, 1e-8,
                                "phi_omega phi_xx - phi_omega_x phi_x - phi^2/2"))
    return PropertyReport(profile.p, profile.omega, tuple(checks))


class Verdict(enum.Enum):
    CONJUGATE_POINT_EXISTS = "ConjugatePointExists"
    NO_CONJUGATE_POINT = "NoConjugatePoint"
    CRITICAL = "Critical"


def count_positive_roots(profile: SolitonProfile, delta: float = DELTA, samples: int = 400,
                         tol: float = VERDICT_TOL) -> int:
    """Sign changes of ``c`` on ``(delta, T]``, ignoring samples with ``|c| <= tol``."""
    t_end = tail_radius(profile, ROOT_TAIL_REL)
    ts = np.geomspace(2 * delta, t_end, samples)
    values = np.array([c_function(profile, t, delta) for t in ts])
    signs = np.sign(values[np.abs(values) > tol])
    return int(np.sum(signs[:-1] != signs[1:]))


def verdict(p: float, omega: float, tol: float = VERDICT_TOL) -> Verdict:
    """Existence of a conjugate point in ``(0, inf)``, decided by the slope and checked by root counting."""
    prof = soliton(p, omega)
    slope = vk_slope(p, omega)
    roots = count_positive_roots(prof, tol=tol)
    expected = 1 if slope > tol else 0
    if roots != expected:
        raise RuntimeError(f"internal inconsistency: slope {slope!r} but {roots} roots of c")
    if slope > tol:
        return Verdict.CONJUGATE_POINT_EXISTS
    if slope < -tol:
        return Verdict.NO_CONJUGATE_POINT
    return Verdict.CRITICAL
