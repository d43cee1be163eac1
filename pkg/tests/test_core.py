import math

import pytest
from hypothesis import given, strategies as st

from asep.core import (
    Configuration,
    IndexSet,
    ModelParams,
    qbracket,
    qbracket_binom,
    qbracket_factorial,
    sigma_positions,
    sigma_sum,
    sign_of_set,
)
from asep.errors import DomainError


def test_params_validation():
    ModelParams(0.3, 0.7)
    with pytest.raises(DomainError):
        ModelParams(0.3, 0.6)
    with pytest.raises(DomainError):
        ModelParams(1.2, -0.2)
    assert ModelParams.from_p(0.25).q == 0.75
    assert ModelParams.from_p(0.5).is_symmetric
    assert not ModelParams.from_p(0.5 + 1e-9).is_symmetric


def test_configuration_rejects_disorder():
    Configuration((0, 1, 5))
    with pytest.raises(DomainError):
        Configuration((1, 0))
    with pytest.raises(DomainError):
        Configuration((0, 0))
    with pytest.raises(DomainError):
        Configuration(())
    assert Configuration((0, 1, 5)).reflected().positions == (-5, -1, 0)


def test_qbracket_trivial_values():
    for p in (0.2, 0.5, 0.9):
        params = ModelParams.from_p(p)
        assert qbracket(1, params) == pytest.approx(1.0, abs=1e-15)
        assert qbracket(2, params) == pytest.approx(1.0, abs=1e-15)
    sym = ModelParams.from_p(0.5)
    assert qbracket(3, sym) == pytest.approx(0.75, abs=1e-15)


def test_qbracket_binom_edges_and_direct_product():
    params = ModelParams.from_p(0.7)
    for n in range(0, 8):
        assert qbracket_binom(n, 0, params) == 1.0
        assert qbracket_binom(n, n, params) == 1.0
    # direct evaluation of [4]!/([2]![2]!) as an independent product
    def bracket(k):
        return (0.7**k - 0.3**k) / 0.4

    direct = (bracket(4) * bracket(3)) / (bracket(2) * bracket(1))
    assert qbracket_binom(4, 2, params) == pytest.approx(direct, rel=1e-14)
    # recursion at (4, 2)
    rec = 0.7**2 * qbracket_binom(3, 2, params) + 0.3**2 * qbracket_binom(3, 1, params)
    assert qbracket_binom(4, 2, params) == pytest.approx(rec, rel=1e-13)
    with pytest.raises(DomainError):
        qbracket_binom(3, 4, params)
    with pytest.raises(DomainError):
        qbracket_binom(3, -1, params)


@given(st.floats(min_value=0.0, max_value=1.0), st.integers(2, 12), st.data())
def test_bracket_recursion_property(p, n, data):
    m = data.draw(st.integers(1, n - 1))
    params = ModelParams.from_p(p)
    lhs = qbracket_binom(n, m, params)
    rhs = p**m * qbracket_binom(n - 1, m, params) + params.q ** (n - m) * qbracket_binom(
        n - 1, m - 1, params
    )
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_bracket_symmetry_at_equal_rates():
    params = ModelParams.from_p(0.5)
    for n in range(1, 10):
        for m in range(0, n + 1):
            assert qbracket_binom(n, m, params) == pytest.approx(
                qbracket_binom(n, n - m, params), rel=1e-12
            )


def test_degenerate_rate_brackets():
    # at p = 1 (or p = 0) every bracket binomial collapses to 1
    for p in (0.0, 1.0):
        params = ModelParams.from_p(p)
        for n in range(1, 8):
            assert qbracket(n, params) == 1.0
            for m in range(0, n + 1):
                assert qbracket_binom(n, m, params) == 1.0


def test_sigma_sum_cases():
    assert sigma_sum(IndexSet.of([], 5)) == 0
    assert sigma_sum(IndexSet.of(range(1, 5), 6)) == 10
    assert sigma_sum(IndexSet.of([2, 3, 5], 6)) == 10


@given(st.integers(1, 10), st.data())
def test_sigma_sum_complement(n, data):
    members = data.draw(st.sets(st.integers(1, n)))
    s = IndexSet.of(members, n)
    assert sigma_sum(s) + sigma_sum(s.complement()) == n * (n + 1) // 2


def test_sigma_positions():
    assert sigma_positions([2, 5], [2, 3, 5]) == 4
    assert sigma_positions([], [1, 4]) == 0
    u = [3, 7, 9, 12]
    assert sigma_positions(u, u) == 10
    with pytest.raises(DomainError):
        sigma_positions([1], [2, 3])


def _listing_sign(u: IndexSet) -> int:
    # sign of the permutation that lists U then its complement, each sorted
    listing = list(u.sorted_members) + list(u.complement().sorted_members)
    inv = sum(
        1
        for i in range(len(listing))
        for j in range(i + 1, len(listing))
        if listing[i] > listing[j]
    )
    return -1 if inv % 2 else 1


@given(st.integers(1, 8), st.data())
def test_sign_of_set_matches_listing_permutation(n, data):
    members = data.draw(st.sets(st.integers(1, n)))
    u = IndexSet.of(members, n)
    assert sign_of_set(u) == _listing_sign(u)


def test_sign_of_set_cases():
    assert sign_of_set(IndexSet.of([1, 2, 3], 6)) == 1
    for n in range(1, 8):
        assert sign_of_set(IndexSet.of([n], n)) == (-1) ** (n - 1)
    assert sign_of_set(IndexSet.of([2, 4], 4)) == -1


def test_factorial_bracket():
    params = ModelParams.from_p(0.6)
    assert qbracket_factorial(0, params) == 1.0
    got = qbracket_factorial(4, params)
    want = math.prod(qbracket(k, params) for k in range(1, 5))
    assert got == pytest.approx(want, rel=1e-14)
