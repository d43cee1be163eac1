import math

import numpy as np
import pytest

from asep.core import Configuration, ModelParams
from asep.errors import DomainError
from asep.oracles import (
    SimBatch,
    SparseDistribution,
    _hop_targets,
    free_walk_pmf,
    gillespie_simulate,
    marginal_from_distribution,
    master_equation_uniformization,
)

P07 = ModelParams.from_p(0.7)


def test_distribution_mass_validation():
    SparseDistribution({(0,): 0.6, (1,): 0.4}, 0.0)
    with pytest.raises(DomainError):
        SparseDistribution({(0,): 0.5}, 0.0)
    with pytest.raises(DomainError):
        SparseDistribution({(0,): -0.1, (1,): 1.1}, 0.0)


def test_generator_moves_one_coordinate_by_one():
    cfg = (0, 1, 5)
    for i in range(3):
        right, left = _hop_targets(cfg, i)
        for nxt in (right, left):
            if nxt is None:
                continue
            diffs = [a - b for a, b in zip(nxt, cfg)]
            assert sorted(map(abs, diffs)) == [0, 0, 1]
    # exclusion blocks the inner hops
    assert _hop_targets((0, 1), 0)[0] is None
    assert _hop_targets((0, 1), 1)[1] is None


def test_uniformization_t0_and_delta():
    Y = Configuration((0, 3))
    dist = master_equation_uniformization(Y, 0.0, P07, 1e-12)
    assert dist.probs == {(0, 3): 1.0}
    assert dist.tail_bound == 0.0


def test_uniformization_single_particle_matches_bessel():
    Y = Configuration((0,))
    t = 0.8
    dist = master_equation_uniformization(Y, t, P07, 1e-12)
    for n in range(-6, 7):
        want = free_walk_pmf(n, t, P07)
        got = dist.probs.get((n,), 0.0)
        assert got == pytest.approx(want, abs=dist.tail_bound + 1e-12)


def test_uniformization_support_is_ordered_and_mass_conserved():
    Y = Configuration((0, 1, 3))
    dist = master_equation_uniformization(Y, 0.7, ModelParams.from_p(0.45), 1e-10)
    for cfg in dist.probs:
        assert all(a < b for a, b in zip(cfg, cfg[1:]))
    assert dist.total_mass() + dist.tail_bound == pytest.approx(1.0, abs=1e-12)


def test_marginal_pushforward():
    dist = SparseDistribution({(0, 2): 0.25, (1, 2): 0.75}, 0.0)
    assert marginal_from_distribution(dist, 1) == {0: 0.25, 1: 0.75}
    assert marginal_from_distribution(dist, 2) == {2: 1.0}
    delta = SparseDistribution({(4, 9): 1.0}, 0.0)
    assert marginal_from_distribution(delta, 2) == {9: 1.0}


def test_gillespie_deterministic_given_seed():
    Y = Configuration((0, 1))
    a = gillespie_simulate(Y, 0.7, P07, 500, seed=11)
    b = gillespie_simulate(Y, 0.7, P07, 500, seed=11)
    assert np.array_equal(a.positions, b.positions)
    c = gillespie_simulate(Y, 0.7, P07, 500, seed=12)
    assert not np.array_equal(a.positions, c.positions)


def test_gillespie_preserves_exclusion_and_tasep_order():
    Y = Configuration((0, 1, 2))
    batch = gillespie_simulate(Y, 1.0, ModelParams.from_p(1.0), 2000, seed=3)
    assert np.all(np.diff(batch.positions, axis=1) >= 1)
    assert np.all(batch.positions >= np.array(Y.positions))


def test_gillespie_single_particle_drift():
    params = ModelParams.from_p(0.8)
    t, n_runs = 1.5, 40000
    batch = gillespie_simulate(Configuration((0,)), t, params, n_runs, seed=5)
    mean = batch.positions[:, 0].mean()
    sem = batch.positions[:, 0].std(ddof=1) / math.sqrt(n_runs)
    assert abs(mean - (params.p - params.q) * t) < 4.0 * sem


def test_gillespie_vs_uniformization_total_variation():
    Y = Configuration((0, 1))
    params = ModelParams.from_p(0.6)
    t, n_runs = 0.8, 30000
    dist = master_equation_uniformization(Y, t, params, 1e-12)
    want = marginal_from_distribution(dist, 1)
    batch = gillespie_simulate(Y, t, params, n_runs, seed=21)
    counts = batch.marginal_counts(1)
    sites = set(want) | set(counts)
    tv = 0.5 * math.fsum(
        abs(counts.get(s, 0) / n_runs - want.get(s, 0.0)) for s in sites
    )
    clt = 0.5 * math.fsum(
        math.sqrt(want.get(s, 0.0) * (1 - want.get(s, 0.0)) / n_runs) for s in sites
    )
    assert tv < 5.0 * clt


def test_marginal_counts_sum_to_runs():
    batch = gillespie_simulate(Configuration((0, 2)), 0.5, P07, 777, seed=2)
    assert sum(batch.marginal_counts(1).values()) == 777
    with pytest.raises(DomainError):
        batch.marginal_counts(3)


def test_step_window_stability_under_doubling():
    # left-most particle law from a step window is insensitive to widening
    params = ModelParams.from_p(0.5)
    t = 0.6
    w1 = Configuration(tuple(range(1, 1 + 24)))
    w2 = Configuration(tuple(range(1, 1 + 48)))
    d1 = master_equation_uniformization(w1, t, params, 1e-10)
    d2 = master_equation_uniformization(w2, t, params, 1e-10)
    m1 = marginal_from_distribution(d1, 1)
    m2 = marginal_from_distribution(d2, 1)
    worst = max(abs(m1.get(s, 0.0) - m2.get(s, 0.0)) for s in set(m1) | set(m2))
    assert worst < 1e-9
