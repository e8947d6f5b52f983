import numpy as np
import pytest

from cmorse.core import (
    BlowUpError,
    BoundaryCondition,
    ConstraintFunction,
    Interval,
    Potential,
    SchroedingerProblem,
    intersection_dimension,
    zero_mean_well,
)
from cmorse.shooting import (
    ExtendedState,
    constrained_basis,
    default_steps,
    integrate_extended,
    oriented_null_space,
    trace_plane,
)

FREE = SchroedingerProblem(Interval(0.0, 1.0), Potential.constant(0.0), BoundaryCondition.DIRICHLET)


def test_default_steps_even_and_floored():
    assert default_steps(1.0) == 2048
    assert default_steps(1e-4) == 16
    assert default_steps(0.3) % 2 == 0


def test_linear_solution_exact():
    tr = integrate_extended(FREE, 0.0, FREE.interval, ExtendedState(0.0, 1.0), steps=64)
    assert abs(tr.u[-1] - 1.0) < 1e-10
    assert abs(tr.uprime[-1] - 1.0) < 1e-10
    assert tr.x.shape == (65,)


def test_sine_solution():
    C = 25.0
    p = SchroedingerProblem(Interval(0.0, 1.0), Potential.constant(-C), BoundaryCondition.DIRICHLET)
    sub = Interval(0.0, 0.7)
    tr = integrate_extended(p, 0.0, sub, ExtendedState(0.0, 1.0))
    assert np.allclose(tr.u, np.sin(5 * tr.x) / 5, atol=1e-11)


def test_constrained_cosine_and_multipliers_constant():
    C = 7.0
    p = SchroedingerProblem(Interval(0.0, 1.0), Potential.constant(-C), BoundaryCondition.DIRICHLET,
                            (ConstraintFunction.constant(1.0),))
    init = ExtendedState(1.0, 0.0, np.array([0.3]), np.array([0.0]))
    tr = integrate_extended(p, 0.0, p.interval, init)
    g = np.sqrt(C)
    # u'' = -C u - a  with u(0) = 1, u'(0) = 0
    exact = (1 + 0.3 / C) * np.cos(g * tr.x) - 0.3 / C
    assert np.max(np.abs(tr.u - exact)) < 1e-10
    assert np.ptp(tr.states[:, 2]) < 1e-10
    assert tr.accumulators[-1, 0] == pytest.approx(np.trapezoid(exact, tr.x), abs=1e-6)


def test_richardson_ratio_fourth_order():
    C = 7.0
    p = SchroedingerProblem(Interval(0.0, 1.0), Potential(lambda x: -C * (1 + 0.5 * np.sin(3 * x))),
                            BoundaryCondition.DIRICHLET)
    ends = [integrate_extended(p, 0.0, p.interval, ExtendedState(1.0, 0.0), steps=n).u[-1] for n in (128, 256, 512)]
    ratio = (ends[0] - ends[1]) / (ends[1] - ends[2])
    assert ratio == pytest.approx(16.0, rel=0.15)


def test_blow_up_reports_position():
    p = SchroedingerProblem(Interval(0.0, 1.0), Potential.constant(1e20), BoundaryCondition.DIRICHLET)
    with pytest.raises(BlowUpError, match="blow-up"):
        integrate_extended(p, 0.0, p.interval, ExtendedState(1.0, 0.0), steps=16)


def test_null_space_orientation():
    w = np.array([[1.0, 2.0, 0.5]])
    n = oriented_null_space(w)
    assert np.allclose(w @ n, 0)
    assert np.linalg.det(np.hstack([n, w.T])) > 0


def test_unconstrained_basis_two_dimensional():
    b = constrained_basis(FREE, 0.0)
    assert b.dim == 2
    assert all(abs(t.sup_norm() - 1) < 1e-14 for t in b.basis)


def test_free_trace_plane_matches_hand_computation():
    # traces of u = 1 and u = x span (1,1,0,0) and (0,1,-1,1)
    plane = trace_plane(constrained_basis(FREE, 0.0))
    expected = np.array([[1, 1, 0, 0], [0, 1, -1, 1]], dtype=float).T
    proj = plane.frame @ plane.frame.T
    assert np.allclose(proj @ expected, expected, atol=1e-10)


def test_well_basis_spans_closed_form():
    # K_c(0) on (-t, t) is spanned by cos(gx) - sin(g t)/(g t) and sin(gx)
    C, t = 25.0, 0.8
    g = np.sqrt(C)
    b = constrained_basis(zero_mean_well(C), 0.0, Interval(-t, t))
    x = b.basis[0].x
    ref = np.column_stack([np.cos(g * x) - np.sin(g * t) / (g * t), np.sin(g * x)])
    for tr in b.basis:
        coef, *_ = np.linalg.lstsq(ref, tr.u, rcond=None)
        assert np.max(np.abs(ref @ coef - tr.u)) < 1e-9
        assert abs(tr.accumulators[-1, 0]) < 1e-8


def test_well_basis_at_flat_spectral_parameter():
    # lam = -C makes V - lam = 0: span {x, x^2 - t^2/3}
    C, t = 25.0, 0.6
    b = constrained_basis(zero_mean_well(C), -C, Interval(-t, t))
    x = b.basis[0].x
    ref = np.column_stack([x, x**2 - t**2 / 3])
    for tr in b.basis:
        coef, *_ = np.linalg.lstsq(ref, tr.u, rcond=None)
        assert np.max(np.abs(ref @ coef - tr.u)) < 1e-9


def test_ode_residual_of_basis():
    p = zero_mean_well(16.0)
    lam = -3.0
    for tr in constrained_basis(p, lam).basis:
        h = tr.h
        d2 = (tr.uprime[2:] - tr.uprime[:-2]) / (2 * h)
        res = d2 - (p.potential(tr.x[1:-1]) - lam) * tr.u[1:-1] + tr.multipliers[0]
        assert np.max(np.abs(res)) < 1e-5


@pytest.mark.parametrize("lam", np.linspace(-30.0, 0.0, 10))
def test_isotropy_along_lambda(lam):
    plane = trace_plane(constrained_basis(zero_mean_well(25.0), lam))
    assert plane.isotropy_defect() < 1e-8
    assert np.linalg.matrix_rank(plane.frame) == 2


def test_trace_plane_needs_two_dimensions():
    p = SchroedingerProblem(Interval(0.0, 1.0), Potential.constant(0.0), BoundaryCondition.DIRICHLET,
                            (ConstraintFunction.constant(1.0), ConstraintFunction(lambda x: x)))
    b = constrained_basis(p, -1.0)
    assert b.dim == 2
    from dataclasses import replace

    with pytest.raises(ValueError, match="non-generic"):
        trace_plane(replace(b, basis=b.basis[:1]))


def test_intersection_at_sine_eigenvalue():
    p = zero_mean_well(25.0)
    plane = trace_plane(constrained_basis(p, np.pi**2 - 25.0))
    assert intersection_dimension(plane, BoundaryCondition.DIRICHLET) == 1
