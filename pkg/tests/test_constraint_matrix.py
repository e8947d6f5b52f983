import numpy as np
import pytest

from cmorse.constraint_matrix import (
    NoStabilizationError,
    ResolventPoleError,
    constraint_matrix,
    default_lambda_sequence,
    index_limit,
    resolvent_apply,
    resolvent_residual,
)
from cmorse.core import BoundaryCondition, ConstraintFunction, Interval, Potential, SchroedingerProblem, zero_mean_well
from cmorse.discrete import morse_index
from cmorse.oracle import quadrature


def _closed_form_m0(C):
    g = np.sqrt(C)
    return 2 / g**2 * (np.tan(g) / g - 1)


def test_resolvent_of_free_laplacian():
    p = SchroedingerProblem(Interval(0, 1), Potential.constant(0.0), BoundaryCondition.DIRICHLET)
    one = ConstraintFunction.constant(1.0)
    u = resolvent_apply(p, 0.0, one)
    assert np.allclose(u.u, u.x * (1 - u.x) / 2, atol=1e-12)
    assert resolvent_residual(p, 0.0, one, u) < 1e-9


@pytest.mark.parametrize("C", [1.0, 9.0, 16.0])
def test_resolvent_of_well_matches_closed_form(C):
    g = np.sqrt(C)
    p = zero_mean_well(C)
    u = resolvent_apply(p, 0.0, p.constraints[0])
    exact = (np.cos(g * u.x) / np.cos(g) - 1) / g**2
    assert np.max(np.abs(u.u - exact)) < 1e-9 * max(1.0, np.max(np.abs(exact)))
    assert resolvent_residual(p, 0.0, p.constraints[0], u) < 1e-6


def test_resolvent_weak_residual():
    rng = np.random.default_rng(3)
    p = SchroedingerProblem(Interval(-1, 2), Potential(lambda x: 4 * np.cos(2 * x) - 3), BoundaryCondition.DIRICHLET)
    rhs = ConstraintFunction(lambda x: np.exp(-x**2) + x)
    lam = -0.7
    u = resolvent_apply(p, lam, rhs)
    x = u.x
    s = (x - x[0]) / (x[-1] - x[0])
    for _ in range(5):
        c = rng.standard_normal(4)
        k = np.arange(1, 5)[:, None]
        psi = c @ np.sin(k * np.pi * s)
        dpsi = c @ (k * np.pi / 3 * np.cos(k * np.pi * s))
        weak = quadrature(u.uprime * dpsi + (p.potential(x) - lam) * u.u * psi - rhs(x) * psi, dx=u.h)
        assert abs(weak) < 1e-9


def test_neumann_resolvent():
    p = SchroedingerProblem(Interval(0, 1), Potential.constant(1.0), BoundaryCondition.NEUMANN)
    u = resolvent_apply(p, 0.0, ConstraintFunction.constant(1.0))
    # (-d^2 + 1) u = 1 with u' = 0 at both ends: u = 1
    assert np.allclose(u.u, 1.0, atol=1e-10)


def test_resolvent_pole_refused():
    p = zero_mean_well(25.0, constrained=False)
    with pytest.raises(ResolventPoleError, match="resolvent pole"):
        resolvent_apply(p, np.pi**2 / 4 - 25.0, ConstraintFunction.constant(1.0))


def test_constraint_matrix_closed_form_small_well():
    sample = constraint_matrix(zero_mean_well(1.0), 0.0)
    assert sample.matrix.shape == (1, 1)
    assert sample.matrix[0, 0] == pytest.approx(2 * (np.tan(1.0) - 1), rel=1e-9)
    assert sample.matrix[0, 0] == pytest.approx(1.1148154493098, rel=1e-9)
    assert sample.negative_count == 0


def test_constraint_matrix_negative_when_tan_below():
    sample = constraint_matrix(zero_mean_well(16.0), 0.0)
    assert sample.matrix[0, 0] == pytest.approx(_closed_form_m0(16.0), rel=1e-8)
    assert sample.negative_count == 1


def test_constraint_matrix_empty_without_constraints():
    sample = constraint_matrix(zero_mean_well(4.0, constrained=False), -0.1)
    assert sample.matrix.shape == (0, 0)
    assert sample.negative_count == 0
    assert index_limit(zero_mean_well(4.0, constrained=False)).limit == 0


def test_two_constraint_matrix_symmetric():
    p = SchroedingerProblem(Interval(-1, 1), Potential(lambda x: -20 + 5 * x), BoundaryCondition.DIRICHLET,
                            (ConstraintFunction.constant(1.0), ConstraintFunction(lambda x: x**2)))
    sample = constraint_matrix(p, -0.3)
    assert sample.asymmetry < 1e-10
    assert np.array_equal(sample.matrix, sample.matrix.T)


def test_diagonal_increases_with_lambda():
    p = zero_mean_well(25.0)
    lams = np.linspace(-2.0, -0.5, 6)
    diag = [constraint_matrix(p, lam).matrix[0, 0] for lam in lams]
    assert np.all(np.diff(diag) > 0)


def test_default_sequence():
    seq = default_lambda_sequence()
    assert len(seq) == 16
    assert seq[0] == -0.1
    assert seq[-1] == pytest.approx(-0.1 * 2**-15)


@pytest.mark.parametrize("C, expected", [(25.0, 1), (2.25, 0), (16.0, 1), (9.0, 1)])
def test_index_limit_reconciles(C, expected):
    p = zero_mean_well(C)
    rep = index_limit(p)
    assert rep.limit == expected
    assert rep.limit == morse_index(p, constrained=False) - morse_index(p)
    assert rep.eigenvalue_trails().shape == (16, 1)


def test_index_limit_without_stabilization():
    with pytest.raises(NoStabilizationError, match="no stabilization"):
        index_limit(zero_mean_well(25.0), [-0.1, -0.05, -0.025, -0.0125])
    with pytest.raises(ValueError, match="negative"):
        index_limit(zero_mean_well(25.0), [0.1, -0.1])


def test_kernel_orthogonal_to_constraint():
    # V = -pi^2/4 on (-1, 1): ker L = cos(pi x / 2) is orthogonal to phi = x, so M stays bounded as lam -> 0-
    # M(0) from the odd reduction to (0, 1): u = (4/pi^2)(sin(pi x / 2) - x)
    p = SchroedingerProblem(Interval(-1, 1), Potential.constant(-np.pi**2 / 4), BoundaryCondition.DIRICHLET,
                            (ConstraintFunction(lambda x: x),))
    m0 = 2 * (4 / np.pi**2) * (4 / np.pi**2 - 1 / 3)
    rep = index_limit(p)
    assert rep.limit == 0
    assert all(s.negative_count == 0 for s in rep.samples)
    assert rep.samples[-1].matrix[0, 0] == pytest.approx(m0, rel=1e-3)
