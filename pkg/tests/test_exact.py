import math

import pytest

from asep.core import Configuration, ModelParams
from asep.errors import BudgetError, DomainError
from asep.exact import (
    TransitionQuery,
    bethe_sum_value,
    dual_query,
    tasep_transition_determinant,
    transition_grid,
    transition_probability,
)
from asep.oracles import free_walk_pmf, master_equation_uniformization

P07 = ModelParams.from_p(0.7)


def test_initial_condition():
    Y = Configuration((0, 1))
    assert transition_probability(TransitionQuery(Y, Y, 0.0, P07)).value == pytest.approx(
        1.0, abs=1e-12
    )
    other = Configuration((0, 2))
    assert transition_probability(TransitionQuery(Y, other, 0.0, P07)).value == pytest.approx(
        0.0, abs=1e-12
    )


@pytest.mark.parametrize("n", range(-5, 6))
def test_single_particle_free_walk(n):
    q = TransitionQuery(Configuration((0,)), Configuration((n,)), 1.3, P07)
    got = transition_probability(q, 1e-12).value
    assert got == pytest.approx(free_walk_pmf(n, 1.3, P07), abs=1e-11)


def test_against_uniformization_n2():
    Y = Configuration((0, 1))
    dist = master_equation_uniformization(Y, 0.5, P07, 1e-12)
    for X in [(0, 1), (-1, 1), (1, 2), (-2, 3), (2, 4)]:
        q = TransitionQuery(Y, Configuration(X), 0.5, P07)
        got = transition_probability(q, 1e-10).value
        assert got == pytest.approx(dist.probs.get(X, 0.0), abs=1e-8)


def test_duality_involution_and_value():
    q = TransitionQuery(Configuration((0, 1)), Configuration((-1, 2)), 0.6, P07)
    d = dual_query(q)
    assert d.Y.positions == (-1, 0)
    assert d.params.p == pytest.approx(0.3)
    assert dual_query(d) == q
    a = transition_probability(q, 1e-11, route="direct").value
    b = transition_probability(d, 1e-11, route="direct").value
    assert a == pytest.approx(b, abs=1e-11)


def test_route_auto_matches_direct():
    Y = Configuration((0, 1))
    for X in [(-3, -1), (-2, 0)]:
        q = TransitionQuery(Y, Configuration(X), 0.8, ModelParams.from_p(0.4))
        auto = transition_probability(q, 1e-11).value
        direct = transition_probability(q, 1e-11, route="direct").value
        assert auto == pytest.approx(direct, abs=1e-9)


def test_determinant_specialization():
    tasep = ModelParams.from_p(1.0)
    # one-sided walk: Poisson jump counts
    q1 = TransitionQuery(Configuration((0,)), Configuration((2,)), 0.9, tasep)
    want = math.exp(-0.9) * 0.9**2 / 2
    assert tasep_transition_determinant(q1, 1e-12).value == pytest.approx(want, abs=1e-12)
    # N = 2 cross-check against the permutation sum
    q2 = TransitionQuery(Configuration((0, 1)), Configuration((0, 3)), 1.1, tasep)
    det = tasep_transition_determinant(q2, 1e-11).value
    direct = transition_probability(q2, 1e-11).value
    assert det == pytest.approx(direct, abs=1e-10)
    # t = 0 identity behavior
    q3 = TransitionQuery(Configuration((0, 1)), Configuration((0, 1)), 0.0, tasep)
    assert tasep_transition_determinant(q3).value == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        tasep_transition_determinant(TransitionQuery(q1.Y, q1.X, 1.0, P07))


def test_preconditions():
    q = TransitionQuery(Configuration((0,)), Configuration((1,)), 1.0, ModelParams.from_p(0.0))
    with pytest.raises(DomainError):
        transition_probability(q, route="direct")
    with pytest.raises(DomainError):
        transition_probability(q)
    big = Configuration(tuple(range(6)))
    with pytest.raises(BudgetError):
        transition_probability(TransitionQuery(big, big, 0.5, P07))
    with pytest.raises(DomainError):
        TransitionQuery(Configuration((0,)), Configuration((0, 1)), 1.0, P07)


def test_master_equation_residual():
    # centered difference in t versus the lattice generator, on the
    # extended (unordered) domain where the sum solves it pointwise
    params = ModelParams.from_p(0.6)
    Y = Configuration((0, 2))
    t, h = 0.8, 1e-4

    def u(X, tt):
        value, _, _, _ = bethe_sum_value(Y, X, tt, params, 1e-12)
        return value.real

    for X in [(0, 2), (-1, 1), (2, 2), (3, 1)]:
        dudt = (u(X, t + h) - u(X, t - h)) / (2 * h)
        rhs = 0.0
        for i in range(2):
            xm = list(X)
            xm[i] -= 1
            xp = list(X)
            xp[i] += 1
            rhs += params.p * u(tuple(xm), t) + params.q * u(tuple(xp), t) - u(X, t)
        assert abs(dudt - rhs) < 1e-6


def test_grid_matches_pointwise_and_normalizes():
    Y = Configuration((0, 1))
    grid = transition_grid(Y, 0.5, P07, (-12, 13), 1e-10)
    assert grid.converged
    total = math.fsum(grid.probs.values())
    assert total == pytest.approx(1.0, abs=1e-9)
    for X in [(0, 1), (-1, 1), (-3, -2), (2, 5)]:
        got = transition_probability(TransitionQuery(Y, Configuration(X), 0.5, P07), 1e-11).value
        assert grid.probs[X] == pytest.approx(got, abs=1e-10)


def test_grid_masks_unreachable_cells_at_total_asymmetry():
    Y = Configuration((0, 1))
    grid = transition_grid(Y, 0.5, ModelParams.from_p(1.0), (-5, 16), 1e-10)
    assert grid.probs[(-1, 1)] == 0.0
    assert grid.probs[(0, 1)] > 0.5  # no jump happened with sizeable odds
    total = math.fsum(grid.probs.values())
    assert total == pytest.approx(1.0, abs=1e-9)


def test_nonnegativity_over_grid():
    Y = Configuration((0, 2))
    grid = transition_grid(Y, 1.0, ModelParams.from_p(0.45), (-12, 14), 1e-10)
    assert min(grid.probs.values()) >= -1e-8
