"""Ground truth independent of every contour formula.

Two oracles: an exact master-equation solver via uniformization (with a
rigorous Poisson tail bound on the mass it cannot account for), and an
event-driven Monte Carlo sampler.  Neither shares a line of math with the
integral formulas, which is the whole point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import Configuration, ModelParams
from .errors import BudgetError, DomainError
from .moments import bessel_i

#: uniformization refuses once the Poisson truncation order passes this
_MAX_POISSON_TERMS = 2000


@dataclass(frozen=True)
class SparseDistribution:
    """Configuration -> probability map plus provable unaccounted mass."""

    probs: dict[tuple[int, ...], float]
    tail_bound: float

    def __post_init__(self) -> None:
        if any(v < -1e-15 for v in self.probs.values()):
            raise DomainError("negative probability in distribution")
        total = math.fsum(self.probs.values()) + self.tail_bound
        if not (1.0 - 1e-12 <= total <= 1.0 + 1e-12):
            raise DomainError(f"mass {total!r} not within 1e-12 of 1")

    def total_mass(self) -> float:
        return math.fsum(self.probs.values())


@dataclass(frozen=True)
class SimBatch:
    """Final positions of every run; reproducible byte-for-byte by seed."""

    n_runs: int
    seed: int
    positions: np.ndarray  # shape (n_runs, N), int64

    def marginal_counts(self, m: int) -> dict[int, int]:
        """Occurrence counts of the m-th left-most particle's position."""
        if not (1 <= m <= self.positions.shape[1]):
            raise DomainError(f"particle index {m} out of range")
        sites, counts = np.unique(self.positions[:, m - 1], return_counts=True)
        return {int(s): int(c) for s, c in zip(sites, counts)}


def _hop_targets(cfg: tuple[int, ...], i: int) -> tuple[tuple[int, ...] | None, tuple[int, ...] | None]:
    """Configurations after particle i hops right / left, None if blocked."""
    n = len(cfg)
    right = None
    if i == n - 1 or cfg[i] + 1 < cfg[i + 1]:
        right = cfg[:i] + (cfg[i] + 1,) + cfg[i + 1:]
    left = None
    if i == 0 or cfg[i] - 1 > cfg[i - 1]:
        left = cfg[:i] + (cfg[i] - 1,) + cfg[i + 1:]
    return right, left


def master_equation_uniformization(
    Y: Configuration,
    t: float,
    params: ModelParams,
    tol: float = 1e-12,
) -> SparseDistribution:
    """Exact transient solution with a computable Poisson tail bound.

    Each particle attempts a jump at rate one (blocked attempts are lazy
    self-loops), so the uniformization rate is N and

        P(t) = sum_k  e^(-Nt) (Nt)^k / k!  *  P_unif^k  applied to delta_Y,

    truncated once the remaining Poisson mass drops below ``tol``; that
    remainder is returned as the tail bound.
    """
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    n = Y.n
    lam_t = n * t
    if t == 0.0:
        return SparseDistribution({Y.positions: 1.0}, 0.0)

    # Poisson(lam_t) weights until the tail is below tol.
    weights = []
    w = math.exp(-lam_t)
    acc = w
    weights.append(w)
    k = 0
    while 1.0 - acc > tol:
        k += 1
        if k > _MAX_POISSON_TERMS:
            raise BudgetError(
                f"uniformization would need more than {_MAX_POISSON_TERMS} "
                f"Poisson terms (lambda*t = {lam_t})"
            )
        w *= lam_t / k
        acc += w
        weights.append(w)
    tail = max(0.0, 1.0 - acc)

    p_rate = params.p / n
    q_rate = params.q / n
    out: dict[tuple[int, ...], float] = {}
    v: dict[tuple[int, ...], float] = {Y.positions: 1.0}
    for step, w in enumerate(weights):
        for cfg, pr in v.items():
            out[cfg] = out.get(cfg, 0.0) + w * pr
        if step == len(weights) - 1:
            break
        nxt: dict[tuple[int, ...], float] = {}
        for cfg, pr in v.items():
            stay = pr
            for i in range(n):
                right, left = _hop_targets(cfg, i)
                if right is not None:
                    nxt[right] = nxt.get(right, 0.0) + pr * p_rate
                    stay -= pr * p_rate
                if left is not None:
                    nxt[left] = nxt.get(left, 0.0) + pr * q_rate
                    stay -= pr * q_rate
            nxt[cfg] = nxt.get(cfg, 0.0) + stay
        v = nxt
    return SparseDistribution(out, tail)


def marginal_from_distribution(dist: SparseDistribution, m: int) -> dict[int, float]:
    """Pushforward onto the m-th left-most particle's position."""
    out: dict[int, float] = {}
    for cfg, pr in dist.probs.items():
        if m < 1 or m > len(cfg):
            raise DomainError(f"particle index {m} out of range")
        site = cfg[m - 1]
        out[site] = out.get(site, 0.0) + pr
    return out


def free_walk_pmf(n: int, t: float, params: ModelParams) -> float:
    """Single-particle displacement law: e^-t (p/q)^(n/2) I_n(2 sqrt(pq) t).

    Degenerates to one-sided Poisson jumps when either rate vanishes.
    """
    p, q = params.p, params.q
    if q == 0.0:
        return math.exp(-t) * t**n / math.factorial(n) if n >= 0 else 0.0
    if p == 0.0:
        return math.exp(-t) * t ** (-n) / math.factorial(-n) if n <= 0 else 0.0
    return math.exp(-t) * (p / q) ** (n / 2.0) * bessel_i(n, 2.0 * math.sqrt(p * q) * t)


def gillespie_simulate(
    Y: Configuration | Iterable[int],
    t: float,
    params: ModelParams,
    n_runs: int,
    seed: int,
) -> SimBatch:
    """Event-driven exact sampling of the exclusion dynamics.

    Next-event scheme: total attempt rate N, exponential waiting times,
    uniform particle choice, a directional coin (p right, q left), and the
    move is suppressed when the target site is occupied.  Every run owns a
    counter-based RNG stream keyed by (seed, run index), so batches are
    reproducible and order-independent.
    """
    cfg0 = tuple(Y.positions if isinstance(Y, Configuration) else Y)
    n = len(cfg0)
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    if n_runs < 1:
        raise DomainError("need at least one run")
    p = params.p
    out = np.empty((n_runs, n), dtype=np.int64)
    block = max(16, int(2 * n * t) + 8)
    for run in range(n_runs):
        rng = np.random.Generator(
            np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, run], dtype=np.uint64))
        )
        pos = list(cfg0)
        clock = 0.0
        while True:
            waits = rng.exponential(scale=1.0 / n, size=block)
            picks = rng.integers(0, n, size=block)
            coins = rng.random(size=block)
            done = False
            for w, i, c in zip(waits, picks, coins):
                clock += w
                if clock >= t:
                    done = True
                    break
                if c < p:  # rightward attempt
                    if i == n - 1 or pos[i] + 1 < pos[i + 1]:
                        pos[i] += 1
                else:
                    if i == 0 or pos[i] - 1 > pos[i - 1]:
                        pos[i] -= 1
            if done:
                break
        out[run] = pos
    return SimBatch(n_runs, seed, out)
