import math

import pytest
from scipy.special import iv

from asep.core import Configuration, ModelParams
from asep.errors import BudgetError, DomainError, RangeError
from asep.exact import transition_grid
from asep.moments import (
    bessel_i,
    bessel_table,
    expected_first_particle,
    psi1_bessel,
    psi_integral,
)


def test_bessel_at_zero_and_symmetry():
    assert bessel_i(0, 0.0) == 1.0
    for n in (1, 2, 7):
        assert bessel_i(n, 0.0) == 0.0
    for n in (-3, -1):
        assert bessel_i(n, 1.7) == bessel_i(-n, 1.7)


@pytest.mark.parametrize("x", [1e-4, 0.3, 2.0, 12.0, 29.0, 31.0, 80.0, 400.0])
def test_bessel_against_scipy(x):
    # scipy is the independent oracle; both branches (series and downward
    # recurrence) are covered by the argument sweep
    for n in (0, 1, 2, 5, 20, 90):
        ref = float(iv(n, x))
        assert bessel_i(n, x) == pytest.approx(ref, rel=5e-13, abs=1e-300)


def test_bessel_generating_identity():
    for x in (0.7, 4.0, 22.0):
        total = bessel_i(0, x) + 2.0 * math.fsum(bessel_i(k, x) for k in range(1, 120))
        assert math.exp(-x) * total == pytest.approx(1.0, abs=1e-12)


def test_bessel_range_errors():
    with pytest.raises(RangeError):
        bessel_i(0, 700.0)
    with pytest.raises(RangeError):
        bessel_i(10**5, 1.0)
    with pytest.raises(DomainError):
        bessel_i(1, -1.0)


def test_bessel_table_recurrence_residual():
    tab = bessel_table(60, 3.4)
    assert tab.recurrence_residual() < 1e-12
    assert tab.get(-4) == tab.get(4)


@pytest.mark.parametrize("p", [0.5, 0.7, 1.0])
@pytest.mark.parametrize("z", [1, 2, 4, 6])
def test_psi1_quadrature_matches_bessel_form(p, z):
    params = ModelParams.from_p(p)
    for t in (0.1, 1.0):
        quad = psi_integral(1, (z,), t, params, 1e-12).value
        closed = psi1_bessel(z, t, params)
        assert quad == pytest.approx(closed, rel=1e-9, abs=1e-12)


def test_psi1_t0_is_zero():
    params = ModelParams.from_p(0.6)
    for z in (1, 2, 5):
        assert psi1_bessel(z, 0.0, params) == pytest.approx(0.0, abs=1e-15)
        assert psi_integral(1, (z,), 0.0, params, 1e-12).value == pytest.approx(
            0.0, abs=1e-12
        )


def test_psi_guards():
    params = ModelParams.from_p(0.6)
    with pytest.raises(BudgetError):
        psi_integral(5, (5, 4, 3, 2, 1), 0.5, params)
    with pytest.raises(DomainError):
        psi_integral(2, (0, 1), 0.5, params)
    with pytest.raises(DomainError):
        psi_integral(1, (1,), 0.5, ModelParams.from_p(0.0))


def test_expectation_free_particle():
    params = ModelParams.from_p(0.8)
    res = expected_first_particle(Configuration((0,)), 2.0, params)
    assert res.value == pytest.approx((0.8 - 0.2) * 2.0, abs=1e-14)


@pytest.mark.parametrize("Y,t,p", [((0, 1), 0.8, 0.7), ((0, 2), 1.0, 0.55)])
def test_expectation_matches_direct_moment(Y, t, p):
    params = ModelParams.from_p(p)
    cfg = Configuration(Y)
    grid = transition_grid(cfg, t, params, (Y[0] - 16, Y[-1] + 17), 1e-11)
    direct = math.fsum(X[0] * v for X, v in grid.probs.items())
    res = expected_first_particle(cfg, t, params, 1e-9)
    assert res.value == pytest.approx(direct, abs=1e-7)
