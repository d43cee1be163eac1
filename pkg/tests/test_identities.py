import numpy as np
import pytest

from asep.core import ModelParams
from asep.identities import (
    _sample_vectors,
    check_bracket_recursion,
    check_perm_identity,
    check_perm_identity_dual,
    check_simple_subset_identity,
    check_subset_identity,
    perm_sum_prefix,
    perm_sum_prefix_direct,
    perm_sum_staircase,
    perm_sum_staircase_direct,
)

P064 = ModelParams.from_p(0.64)


def test_n1_trivial():
    r = check_perm_identity(1, P064, samples=3)
    assert r.passed and r.max_rel_error < 1e-14
    r = check_perm_identity_dual(1, P064, samples=3)
    assert r.passed


def test_n2_two_term_sum_by_hand():
    # the two-permutation case written out literally
    p, q = 0.7, 0.3
    xi = np.array([0.3 + 0.1j, -0.2 + 0.0j])
    a, b = xi
    lhs = (p + q * a * b - a) * b / ((1 - a * b) * (1 - b)) - (
        p + q * a * b - b
    ) * a / ((1 - a * b) * (1 - a))
    rhs = p * (b - a) / ((1 - a) * (1 - b))
    assert abs(lhs - rhs) < 1e-14
    got = perm_sum_staircase(xi, ModelParams.from_p(0.7))
    assert abs(got - lhs) < 1e-13


@pytest.mark.parametrize("n", [2, 3, 4])
def test_regrouped_sums_match_brute_force(n):
    # the subset recursion is plain re-association of the N!-term sum;
    # confirm against the literal evaluation where that is well-conditioned
    vecs, _ = _sample_vectors(n, 5, P064, seed=5)
    for xi in vecs:
        a = perm_sum_staircase(xi, P064)
        b = perm_sum_staircase_direct(xi, P064)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(b))
        c = perm_sum_prefix(xi, P064)
        d = perm_sum_prefix_direct(xi, P064)
        assert abs(c - d) <= 1e-10 * max(1.0, abs(d))


@pytest.mark.parametrize("p", [0.3, 0.9])
@pytest.mark.parametrize("n", [3, 5])
def test_perm_identities_quick(n, p):
    params = ModelParams.from_p(p)
    assert check_perm_identity(n, params, samples=8).passed
    assert check_perm_identity_dual(n, params, samples=8).passed


def test_dual_check_exercises_both_routes():
    r = check_perm_identity_dual(4, P064, samples=10)
    assert r.passed and r.max_rel_error < 1e-10


@pytest.mark.parametrize("p", [0.3, 0.9])
def test_subset_identities_quick(p):
    params = ModelParams.from_p(p)
    for n, m in [(3, 1), (4, 2), (5, 0), (6, 3)]:
        assert check_subset_identity(n, m, params, samples=8).passed
    for n, m in [(3, 0), (3, 3), (5, 2), (6, 3)]:
        assert check_simple_subset_identity(n, m, params, samples=8).passed


def test_bracket_recursion_report():
    for p in (0.3, 0.7, 1.0, 0.0):
        r = check_bracket_recursion(12, ModelParams.from_p(p))
        assert r.passed and r.max_rel_error < 1e-13


def test_sampler_respects_margins():
    vecs, rejected = _sample_vectors(5, 20, ModelParams.from_p(0.5), seed=9)
    assert len(vecs) == 20
    for xi in vecs:
        assert np.all(np.abs(xi) >= 0.1) and np.all(np.abs(xi) <= 0.6)
        for i in range(5):
            for j in range(5):
                if i != j:
                    assert abs(0.5 + 0.5 * xi[i] * xi[j] - xi[i]) >= 1e-3


def test_report_serialization():
    r = check_perm_identity(2, P064, samples=3)
    d = r.as_dict()
    assert d["name"] == "perm-staircase"
    assert isinstance(d["passed"], bool)
    assert d["seed"] == r.seed
