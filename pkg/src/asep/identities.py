"""Numeric verification engine for the algebraic identities.

Each check evaluates both sides of an identity at seeded random complex
points and reports the worst relative deviation.  The permutation-sum
identities are badly conditioned when the suppressed rate is small (their
value carries a p- or q-power of order N^2 that the N! terms must
reproduce through cancellation), so their left sides are evaluated by an
exact regrouping of the sum -- group on the first slot, recurse on the
remaining index set, memoize over subsets -- in arbitrary-precision
arithmetic.  The regrouping is plain re-association of a finite sum; the
brute-force N! evaluation is kept as a cross-check for small N.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .core import ModelParams, qbracket_binom
from .errors import DomainError
from .kernel import perm_sign

_MP_DPS = 50
#: rejected-sample margin on every denominator
_POLE_MARGIN = 1e-3
_MIN_SEPARATION = 0.08


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of one identity check over a sample batch."""

    name: str
    n: int
    p: float
    samples: int
    seed: int
    max_rel_error: float
    tol: float
    passed: bool
    resampled: int = 0

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "p": self.p,
            "samples": self.samples,
            "seed": self.seed,
            "max_rel_error": self.max_rel_error,
            "tol": self.tol,
            "passed": self.passed,
            "resampled": self.resampled,
        }


# ---------------------------------------------------------------------------
# sampling

def _draw(rng: np.random.Generator, n: int) -> np.ndarray:
    radius = rng.uniform(0.35, 0.6, n)
    base = rng.uniform(0.0, 2.0 * np.pi)
    jitter = rng.uniform(-0.25, 0.25, n)
    phases = base + 2.0 * np.pi * (np.arange(n) + jitter) / n
    return radius * np.exp(1j * phases)


def _admissible(xi: np.ndarray, params: ModelParams) -> bool:
    n = len(xi)
    p, q = params.p, params.q
    for i in range(n):
        if abs(xi[i] - 1.0) < _POLE_MARGIN:
            return False
        for j in range(n):
            if i == j:
                continue
            if abs(xi[i] - xi[j]) < _MIN_SEPARATION:
                return False
            if abs(p + q * xi[i] * xi[j] - xi[i]) < _POLE_MARGIN:
                return False
    # prefix and suffix products must stay away from 1 for the telescoping
    # denominators of the permutation identities
    for perm_like in (xi, xi[::-1]):
        prod = 1.0 + 0j
        for z in perm_like:
            prod *= z
            if abs(prod - 1.0) < _POLE_MARGIN:
                return False
    return True


def _sample_vectors(n: int, count: int, params: ModelParams, seed: int):
    rng = np.random.default_rng(seed)
    out = []
    rejected = 0
    while len(out) < count:
        xi = _draw(rng, n)
        if _admissible(xi, params):
            out.append(xi)
        else:
            rejected += 1
            if rejected > 1000 * count:
                raise DomainError("sampler cannot satisfy pole margins")
    return out, rejected


# ---------------------------------------------------------------------------
# permutation-sum left sides

def perm_sum_staircase(xi, params: ModelParams) -> complex:
    """Sum over permutations with the staircase numerator and tail-product
    denominators, via first-slot regrouping in high precision."""
    n = len(xi)
    with mp.workdps(_MP_DPS):
        z = [mp.mpc(v) for v in xi]
        p, q = mp.mpf(params.p), mp.mpf(params.q)
        memo = {0: mp.mpc(1)}

        def phi(mask: int):
            if mask in memo:
                return memo[mask]
            idx = [i for i in range(n) if mask >> i & 1]
            prod_all = mp.mpc(1)
            for i in idx:
                prod_all *= z[i]
            tot = mp.mpc(0)
            for pos, k in enumerate(idx):
                fac = mp.mpc(1)
                for l in idx:
                    if l != k:
                        fac *= p + q * z[k] * z[l] - z[k]
                term = fac * (prod_all / z[k]) * phi(mask & ~(1 << k))
                tot += term if pos % 2 == 0 else -term
            memo[mask] = tot / (1 - prod_all)
            return memo[mask]

        return complex(phi((1 << n) - 1))


def perm_sum_prefix(xi, params: ModelParams) -> complex:
    """Sum over permutations with prefix-product-minus-one denominators.

    Same regrouping on the first slot; the running prefix product is the
    product over the already-consumed complement, so memoization over the
    remaining set is still exact.
    """
    n = len(xi)
    with mp.workdps(_MP_DPS):
        z = [mp.mpc(v) for v in xi]
        p, q = mp.mpf(params.p), mp.mpf(params.q)
        full = (1 << n) - 1
        memo = {0: mp.mpc(1)}

        def psi(mask: int):
            if mask in memo:
                return memo[mask]
            idx = [i for i in range(n) if mask >> i & 1]
            c = mp.mpc(1)
            for i in range(n):
                if not (mask >> i & 1):
                    c *= z[i]
            tot = mp.mpc(0)
            for pos, k in enumerate(idx):
                fac = mp.mpc(1)
                for l in idx:
                    if l != k:
                        fac *= p + q * z[k] * z[l] - z[k]
                term = fac * psi(mask & ~(1 << k)) / (c * z[k] - 1)
                tot += term if pos % 2 == 0 else -term
            memo[mask] = tot
            return tot

        return complex(psi(full))


def perm_sum_staircase_direct(xi, params: ModelParams) -> complex:
    """Literal N!-term evaluation (small-N cross-check of the regrouping)."""
    n = len(xi)
    p, q = params.p, params.q
    total = 0.0 + 0j
    for sig in itertools.permutations(range(n)):
        sgn = perm_sign([s + 1 for s in sig])
        num = 1.0 + 0j
        for i in range(n):
            for j in range(i + 1, n):
                num *= p + q * xi[sig[i]] * xi[sig[j]] - xi[sig[i]]
        stair = 1.0 + 0j
        for i in range(n):
            stair *= xi[sig[i]] ** i
        den = 1.0 + 0j
        for j in range(n):
            tail = 1.0 + 0j
            for l in range(j, n):
                tail *= xi[sig[l]]
            den *= 1.0 - tail
        total += sgn * num * stair / den
    return total


def perm_sum_prefix_direct(xi, params: ModelParams) -> complex:
    n = len(xi)
    p, q = params.p, params.q
    total = 0.0 + 0j
    for sig in itertools.permutations(range(n)):
        sgn = perm_sign([s + 1 for s in sig])
        num = 1.0 + 0j
        for i in range(n):
            for j in range(i + 1, n):
                num *= p + q * xi[sig[i]] * xi[sig[j]] - xi[sig[i]]
        den = 1.0 + 0j
        pref = 1.0 + 0j
        for j in range(n):
            pref *= xi[sig[j]]
            den *= pref - 1.0
        total += sgn * num / den
    return total


def _vandermonde(xi) -> complex:
    out = 1.0 + 0j
    for i in range(len(xi)):
        for j in range(i + 1, len(xi)):
            out *= xi[j] - xi[i]
    return out


def _rel_err(lhs: complex, rhs: complex) -> float:
    scale = max(abs(rhs), 1e-300)
    return abs(lhs - rhs) / scale


# ---------------------------------------------------------------------------
# checks

def check_perm_identity(
    n: int, params: ModelParams, samples: int = 30, seed: int = 20080316, tol: float = 1e-9
) -> IdentityReport:
    """Staircase permutation sum vs p^(n(n-1)/2) Vandermonde / (1 - xi)."""
    if not (1 <= n <= 7):
        raise DomainError("permutation identity checked for 1 <= n <= 7")
    vecs, rejected = _sample_vectors(n, samples, params, seed)
    worst = 0.0
    for xi in vecs:
        lhs = perm_sum_staircase(xi, params)
        rhs = params.p ** (n * (n - 1) // 2) * _vandermonde(xi) / np.prod(1.0 - xi)
        worst = max(worst, _rel_err(lhs, complex(rhs)))
    return IdentityReport(
        "perm-staircase", n, params.p, samples, seed, float(worst), tol, bool(worst < tol), rejected
    )


def check_perm_identity_dual(
    n: int, params: ModelParams, samples: int = 30, seed: int = 20080316, tol: float = 1e-9
) -> IdentityReport:
    """Prefix-denominator permutation sum vs its closed form, two routes.

    Route one evaluates the sum directly; route two maps it through the
    inversion substitution xi -> 1/xi (reversed) with rates swapped, which
    turns it into the staircase sum times a monomial.  Both must match the
    closed form q^(n(n-1)/2) Vandermonde / (xi - 1).
    """
    if not (1 <= n <= 7):
        raise DomainError("permutation identity checked for 1 <= n <= 7")
    vecs, rejected = _sample_vectors(n, samples, params, seed)
    worst = 0.0
    swapped = params.swapped()
    for xi in vecs:
        rhs = params.q ** (n * (n - 1) // 2) * _vandermonde(xi) / np.prod(xi - 1.0)
        lhs_direct = perm_sum_prefix(xi, params)
        eta = 1.0 / xi[::-1]
        lhs_via = perm_sum_staircase(eta, swapped) * complex(np.prod(xi) ** (n - 2))
        worst = max(worst, _rel_err(lhs_direct, complex(rhs)))
        worst = max(worst, _rel_err(lhs_via, complex(rhs)))
    return IdentityReport(
        "perm-prefix", n, params.p, samples, seed, float(worst), tol, bool(worst < tol), rejected
    )


def _cross_factor(xi, S, Sc, p, q):
    out = xi.dtype.type(1)
    for i in S:
        for j in Sc:
            out *= (p + q * xi[i] * xi[j] - xi[i]) / (xi[j] - xi[i])
    return out


def check_subset_identity(
    n: int, m: int, params: ModelParams, samples: int = 30, seed: int = 20080316, tol: float = 1e-9
) -> IdentityReport:
    """Cardinality-m subset sum with the complement-product weight."""
    if not (0 <= m < n):
        raise DomainError("subset identity needs 0 <= m <= n-1")
    vecs, rejected = _sample_vectors(n, samples, params, seed)
    brk = qbracket_binom(n - 1, m, params)
    worst = 0.0
    pq = np.clongdouble(params.p), np.clongdouble(params.q)
    for xi in vecs:
        # extended precision: the right side carries a q^m suppression the
        # term cancellation has to reproduce
        z = xi.astype(np.clongdouble)
        lhs = np.clongdouble(0)
        for S in itertools.combinations(range(n), m):
            Sc = [j for j in range(n) if j not in S]
            prod_c = np.clongdouble(1)
            for j in Sc:
                prod_c *= z[j]
            lhs += _cross_factor(z, S, Sc, *pq) * (1 - prod_c)
        rhs = params.q**m * brk * (1.0 - complex(np.prod(xi)))
        worst = max(worst, _rel_err(complex(lhs), rhs))
    return IdentityReport(
        "subset-weighted", n, params.p, samples, seed, float(worst), tol, bool(worst < tol), rejected
    )


def check_simple_subset_identity(
    n: int, m: int, params: ModelParams, samples: int = 30, seed: int = 20080316, tol: float = 1e-9
) -> IdentityReport:
    """Plain cardinality-m subset sum; the content is that it is constant."""
    if not (0 <= m <= n):
        raise DomainError("subset identity needs 0 <= m <= n")
    vecs, rejected = _sample_vectors(n, max(samples, 3), params, seed)
    brk = qbracket_binom(n, m, params)
    worst = 0.0
    values = []
    pq = np.clongdouble(params.p), np.clongdouble(params.q)
    for xi in vecs:
        z = xi.astype(np.clongdouble)
        lhs = np.clongdouble(0)
        for S in itertools.combinations(range(n), m):
            Sc = [j for j in range(n) if j not in S]
            lhs += _cross_factor(z, S, Sc, *pq)
        values.append(complex(lhs))
        worst = max(worst, _rel_err(complex(lhs), complex(brk)))
    # constancy across distinct sample vectors is the identity's content
    spread = max(abs(v - values[0]) for v in values) / max(1.0, abs(brk))
    worst = max(worst, spread)
    return IdentityReport(
        "subset-plain", n, params.p, samples, seed, float(worst), tol, bool(worst < tol), rejected
    )


def check_bracket_recursion(
    n_max: int, params: ModelParams, tol: float = 1e-12, seed: int = 0
) -> IdentityReport:
    """binom[n,m] = p^m binom[n-1,m] + q^(n-m) binom[n-1,m-1]."""
    worst = 0.0
    count = 0
    for n in range(1, n_max + 1):
        for m in range(1, n):
            lhs = qbracket_binom(n, m, params)
            rhs = params.p**m * qbracket_binom(n - 1, m, params) + params.q ** (
                n - m
            ) * qbracket_binom(n - 1, m - 1, params)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
            count += 1
    return IdentityReport(
        "bracket-recursion", n_max, params.p, count, seed, float(worst), tol, bool(worst < tol)
    )


def run_identity_suite(
    params_list=(0.3, 0.5, 0.7, 0.9),
    n_perm: int = 7,
    n_subset: int = 6,
    samples: int = 30,
    seed: int = 20080316,
    tol: float = 1e-9,
) -> list[IdentityReport]:
    """The full identity battery; used by the CLI verify command."""
    reports = []
    for p in params_list:
        params = ModelParams.from_p(p)
        for n in range(2, n_perm + 1):
            reports.append(check_perm_identity(n, params, samples, seed, tol))
            reports.append(check_perm_identity_dual(n, params, samples, seed, tol))
        for n in range(2, n_subset + 1):
            for m in range(0, n):
                reports.append(check_subset_identity(n, m, params, samples, seed, tol))
                reports.append(check_simple_subset_identity(n, m, params, samples, seed, tol))
        reports.append(check_bracket_recursion(12, params, max(1e-12, tol * 1e-3), seed))
    return reports
