import numpy as np
import pytest
import sympy as sp
from scipy.special import beta

from cmorse.nls import (
    DELTA,
    LATTICE,
    PowerLawNonlinearity,
    Verdict,
    c_derivative,
    c_function,
    c_table,
    count_positive_roots,
    g_of,
    profile_residuals,
    property_suite,
    soliton,
    tail_radius,
    truncation_radius,
    verdict,
    vk_slope,
)


def _slope_closed_form(p, omega):
    # int phi^2 = |omega|^(1/p - 1/2) B(1/p, 1/2) / p
    a = 1 / p - 0.5
    return -a * abs(omega) ** (a - 1) * beta(1 / p, 0.5) / p


def test_soliton_rejects_growing_states():
    with pytest.raises(ValueError, match="no decaying state"):
        soliton(1.0, 0.0)
    with pytest.raises(ValueError):
        soliton(-1.0, -1.0)
    with pytest.raises(ValueError):
        PowerLawNonlinearity(0.0)


def test_cubic_soliton_is_sech():
    prof = soliton(1.0, -1.0)
    x = np.linspace(-10, 10, 501)
    assert np.allclose(prof.phi(x), 1 / np.cosh(x), rtol=1e-14)
    assert np.max(np.abs(prof.phi_xx(x) + 2 * prof.phi(x) ** 3 - prof.phi(x))) < 1e-12


def test_septic_soliton_shape():
    prof = soliton(3.0, -1.0)
    x = np.linspace(-4, 4, 101)
    assert np.allclose(prof.phi(x), (1 / np.cosh(3 * x)) ** (1 / 3), rtol=1e-14)


@pytest.mark.parametrize("p, omega", LATTICE)
def test_peak_values(p, omega):
    prof = soliton(p, omega)
    assert prof.phi(0.0) == pytest.approx(abs(omega) ** (1 / (2 * p)))
    assert prof.phi_x(0.0) == 0.0


@pytest.mark.parametrize("p", [0.5, 1, 2, 3])
def test_closed_forms_against_symbolic_derivatives(p):
    x, w = sp.symbols("x w")
    p_s = sp.Rational(p).limit_denominator(4)
    b = p_s * sp.sqrt(-w)
    phi = (-w) ** (1 / (2 * p_s)) * sp.sech(b * x) ** (1 / p_s)
    exprs = {
        "phi_x": sp.diff(phi, x),
        "phi_xx": sp.diff(phi, x, 2),
        "phi_xxx": sp.diff(phi, x, 3),
        "phi_omega": sp.diff(phi, w),
        "phi_omega_x": sp.diff(phi, w, x),
        "phi_omega_xx": sp.diff(phi, w, x, x),
    }
    ode = sp.diff(phi, x, 2) + (p_s + 1) * phi ** (2 * p_s + 1) + w * phi
    for omega in (-0.5, -1.3):
        prof = soliton(float(p), omega)
        for xv in (-1.7, -0.2, 0.4, 2.5):
            subs = {x: sp.Float(xv, 30), w: sp.Float(omega, 30)}
            assert abs(float(ode.evalf(30, subs=subs))) < 1e-25
            for name, expr in exprs.items():
                assert getattr(prof, name)(xv) == pytest.approx(float(expr.evalf(30, subs=subs)), rel=1e-11, abs=1e-14)


@pytest.mark.parametrize("p, omega", LATTICE)
def test_profile_invariants(p, omega):
    r = profile_residuals(soliton(p, omega))
    assert r["ode"] <= 1e-9
    assert r["conserved"] <= 1e-9
    assert r["evenness"] == 0.0
    assert r["min_phi"] > 0
    assert r["l_plus_phi_x"] <= 1e-7
    assert r["l_plus_phi_omega"] <= 1e-6
    assert r["wronskian"] <= 1e-8


def test_wronskian_at_origin():
    prof = soliton(3.0, -1.0)
    lhs = prof.phi_omega(0.0) * prof.phi_xx(0.0) - prof.phi_omega_x(0.0) * prof.phi_x(0.0)
    assert lhs == pytest.approx(0.5 * prof.phi(0.0) ** 2, rel=1e-14)


def test_g_of_power_law():
    assert g_of(PowerLawNonlinearity(1.0), 2.0) == 2.0
    assert g_of(PowerLawNonlinearity(3.0), 2.0) == 8.0
    nl = PowerLawNonlinearity(2.0)
    u, h = 0.7, 1e-5
    dg = (g_of(nl, u + h) - g_of(nl, u - h)) / (2 * h)
    assert abs(u * dg + g_of(nl, u) - nl.f(u)) < 1e-10
    with pytest.raises(ValueError):
        g_of(nl, 0.0)


def test_truncation_radius_meets_tail_bound():
    for p, omega in LATTICE:
        prof = soliton(p, omega)
        x = truncation_radius(prof)
        assert x >= 20 / np.sqrt(-omega)
        assert prof.phi(x) ** 2 < 1e-14 * prof.phi(0.0) ** 2
        t = tail_radius(prof, 1e-10)
        assert prof.phi(t) ** 2 == pytest.approx(1e-10 * prof.phi(0.0) ** 2, rel=1e-6)


def test_c_singularity_window():
    prof = soliton(1.0, -1.0)
    with pytest.raises(ValueError, match="singularity window"):
        c_function(prof, 5e-4)


@pytest.mark.parametrize("p, omega", LATTICE)
def test_slope_matches_closed_form(p, omega):
    assert vk_slope(p, omega) == pytest.approx(_slope_closed_form(p, omega), abs=1e-9)


def test_slope_sign_flips_at_two():
    for omega in (-0.5, -1.0, -2.0):
        assert vk_slope(3.0, omega) > 0
        assert vk_slope(1.0, omega) < 0
        assert abs(vk_slope(2.0, omega)) < 1e-6
    assert vk_slope(1.0, -1.0) == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("p, omega", LATTICE)
def test_c_monotone_on_each_side(p, omega):
    prof = soliton(p, omega)
    t_end = 6 / np.sqrt(-omega)
    for side in (-1, 1):
        ts = side * np.linspace(DELTA * 2, t_end, 200)
        cs = np.array([c_function(prof, t) for t in np.sort(ts)])
        assert np.all(np.diff(cs) > 0)
    assert np.all(c_derivative(prof, np.linspace(0.1, 2, 7)) > 0)


@pytest.mark.parametrize("p, omega", LATTICE)
def test_property_suite_passes(p, omega):
    report = property_suite(soliton(p, omega))
    assert report.passed, report.as_dict()


def test_property_suite_values_for_cubic():
    report = property_suite(soliton(1.0, -1.0))
    assert report["right_tail_limit"].passed
    assert report["left_divergence"].value > 1e3
    assert report["right_divergence"].value < -1e3


def test_root_of_c_lies_right_of_origin():
    prof = soliton(3.0, -1.0)
    ts, cs = c_table(prof, 6.0)
    left = cs[ts < 0]
    assert np.all(left > 0)
    right = cs[ts > 0]
    assert np.sum(np.sign(right[:-1]) != np.sign(right[1:])) == 1


def test_verdicts():
    assert verdict(3.0, -1.0) is Verdict.CONJUGATE_POINT_EXISTS
    assert verdict(1.0, -1.0) is Verdict.NO_CONJUGATE_POINT
    assert verdict(2.0, -1.0) is Verdict.CRITICAL
    assert count_positive_roots(soliton(3.0, -1.0)) == 1
    assert count_positive_roots(soliton(1.0, -1.0)) == 0
