import numpy as np
import pytest

from cmorse.core import BoundaryCondition, ConstraintFunction, Interval, Potential, SchroedingerProblem, zero_mean_well
from cmorse.discrete import (
    DiscreteForm,
    ShiftAtEigenvalueError,
    assemble,
    constrain,
    inertia,
    inertia_below,
    morse_index,
)
from cmorse.oracle import RootCountQuery, RootMode, count_roots, dense_negative_count


def _form(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return DiscreteForm(matrix, np.arange(len(matrix), dtype=float), np.ones(len(matrix)), 1.0)


def test_free_laplacian_ground_state():
    p = SchroedingerProblem(Interval(0, 1), Potential.constant(0.0), BoundaryCondition.DIRICHLET)
    form = assemble(p, 99)
    assert np.linalg.eigvalsh(form.matrix)[0] == pytest.approx(np.pi**2, rel=0.01)
    assert form.is_tridiagonal


def test_neumann_form_symmetric_with_zero_mode():
    p = SchroedingerProblem(Interval(0, 2), Potential.constant(0.0), BoundaryCondition.NEUMANN)
    form = assemble(p, 50)
    assert np.array_equal(form.matrix, form.matrix.T)
    eig = np.linalg.eigvalsh(form.matrix)
    assert abs(eig[0]) < 1e-10
    assert eig[1] == pytest.approx((np.pi / 2) ** 2, rel=0.01)


def test_gershgorin_band():
    p = SchroedingerProblem(Interval(-1, 1), Potential(lambda x: 3 + np.cos(x)), BoundaryCondition.DIRICHLET)
    form = assemble(p, 200)
    assert np.all(form.gershgorin_lower() >= 3 + np.cos(1.0) - 4 / form.mass_scale**2 - 1e-9)


def test_well_counts():
    unconstrained = zero_mean_well(25.0, constrained=False)
    assert inertia_below(assemble(unconstrained, 200), 0.0) == 3
    assert inertia_below(assemble(unconstrained, 400), 0.0) == 3
    assert morse_index(zero_mean_well(25.0)) == 2


def test_neumann_well_matches_oracle():
    p = zero_mean_well(25.0, constrained=False, bc=BoundaryCondition.NEUMANN)
    assert morse_index(p, constrained=False) == count_roots(RootCountQuery(25.0, RootMode.UNCONSTRAINED_NEUMANN))


@pytest.mark.parametrize("C", [1.5**2, 9.0, 16.0, 25.0, 49.0, 80.0])
def test_discrete_matches_root_counts(C):
    assert morse_index(zero_mean_well(C)) == count_roots(RootCountQuery(C, RootMode.CONSTRAINED_DIRICHLET))
    assert morse_index(zero_mean_well(C), constrained=False) == count_roots(
        RootCountQuery(C, RootMode.UNCONSTRAINED_DIRICHLET)
    )


def test_tangent_branch_keeps_count():
    # tan 1.5 > 1.5: the constraint removes no negative direction, and there is none to remove
    p = zero_mean_well(1.5**2)
    assert morse_index(p) == morse_index(p, constrained=False) == 0
    # tan 1.9 < 1.9: the single negative direction is removed
    q = zero_mean_well(1.9**2)
    assert morse_index(q, constrained=False) == 1
    assert morse_index(q) == 0


def test_constrain_shrinks_and_interlaces():
    p = SchroedingerProblem(Interval(-1, 1), Potential(lambda x: -40 * np.exp(-4 * x**2)), BoundaryCondition.DIRICHLET,
                            (ConstraintFunction.constant(1.0), ConstraintFunction(lambda x: x**3)))
    form = assemble(p, 200)
    reduced = constrain(form, p.constraints)
    assert reduced.size == form.size - 2
    n, nc = inertia_below(form), inertia_below(reduced)
    assert n - 2 <= nc <= n
    assert constrain(form, []) is form


def test_constrain_rejects_dependent_vectors():
    form = assemble(zero_mean_well(4.0, constrained=False), 50)
    one = ConstraintFunction.constant(1.0)
    with pytest.raises(ValueError, match="rank-deficient"):
        constrain(form, [one, ConstraintFunction.constant(3.0)])


def test_small_inertia_examples():
    assert inertia_below(_form(np.eye(4))) == 0
    assert inertia_below(_form(np.diag([-2.0, -1.0, 3.0]))) == 2
    assert inertia_below(_form(np.diag([-2.0, -1.0, 3.0])), 5.0) == 3


def test_shift_at_eigenvalue_is_perturbed():
    form = _form(np.diag([1.0, 2.0, 3.0]))
    res = inertia(form, 2.0)
    assert res.perturbation < 0
    assert res.negative == 1


def test_dense_pivots_with_two_by_two_blocks():
    a = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
    assert inertia_below(_form(a)) == 2


def test_inertia_agrees_with_dense_oracle():
    rng = np.random.default_rng(11)
    for n in (5, 40, 120, 200):
        a = rng.standard_normal((n, n))
        a = (a + a.T) / 2
        assert inertia_below(_form(a)) == dense_negative_count(a)


def test_shift_at_eigenvalue_of_large_matrix_raises():
    # the nudge is 1e-10 absolute while the pivot test scales with the norm
    with pytest.raises(ShiftAtEigenvalueError, match="shift at eigenvalue"):
        inertia(_form(np.diag([0.0, 1e6])), 0.0)
