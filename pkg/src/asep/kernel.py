"""Bethe-ansatz building blocks and the contour integrands.

The single-particle energy eps(xi) = p/xi + q xi - 1, the two-particle
scattering factors S_ab, the permutation amplitudes A_sigma (products of
S-factors over inversions) and the product-form integrands used by the
transition and marginal formulas all live here.  Everything is written
against numpy broadcasting so the quadrature engine can evaluate whole
grid chunks at once; scalars work too.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Configuration, IndexSet, ModelParams
from .errors import DomainError, PoleError

#: Any denominator magnitude below this aborts the evaluation: the contour
#: is touching a pole and every sample near it is garbage.
POLE_EPS = 1e-14


def _check_den(den, what: str):
    m = np.min(np.abs(den))
    if m < POLE_EPS:
        raise PoleError(f"{what} within {m:.2e} of zero on the contour")
    return den


def ipow(z, n: int):
    """Integer power by repeated squaring (branch-safe for negative n)."""
    if n == 0:
        return np.ones_like(np.asarray(z)) if isinstance(z, np.ndarray) else 1.0 + 0j
    base = z if n > 0 else 1.0 / z
    k = abs(n)
    out = None
    while k:
        if k & 1:
            out = base if out is None else out * base
        k >>= 1
        if k:
            base = base * base
    return out


def epsilon(xi, params: ModelParams):
    """Single-particle energy p/xi + q*xi - 1."""
    if np.min(np.abs(xi)) == 0.0:
        raise DomainError("epsilon(xi) undefined at xi = 0")
    return params.p / xi + params.q * xi - 1.0


def s_factor(xa, xb, params: ModelParams):
    """Scattering factor -(p + q xa xb - xa)/(p + q xa xb - xb)."""
    p, q = params.p, params.q
    cross = q * xa * xb
    den = _check_den(p + cross - xb, "scattering denominator")
    return -(p + cross - xa) / den


# ---------------------------------------------------------------------------
# permutations

def all_permutations(n: int) -> Iterable[tuple[int, ...]]:
    """All of S_n in lexicographic order, 1-based one-line notation."""
    return itertools.permutations(range(1, n + 1))


def inversion_pairs(images: Sequence[int]) -> list[tuple[int, int]]:
    """Inversions of sigma: pairs (sigma(i), sigma(j)) with i<j, sigma(i)>sigma(j)."""
    n = len(images)
    return [
        (images[i], images[j])
        for i in range(n)
        for j in range(i + 1, n)
        if images[i] > images[j]
    ]


def perm_sign(images: Sequence[int]) -> int:
    return -1 if len(inversion_pairs(images)) % 2 else 1


def transpose_entries(images: Sequence[int], i: int) -> tuple[int, ...]:
    """Swap the entries in positions i and i+1 (1-based position i)."""
    if not (1 <= i < len(images)):
        raise DomainError(f"transposition position {i} out of range")
    out = list(images)
    out[i - 1], out[i] = out[i], out[i - 1]
    return tuple(out)


def bethe_amplitude(images: Sequence[int], xi: Sequence, params: ModelParams):
    """A_sigma: product of S_ab over the inversions of sigma.

    ``xi`` is indexed by particle label (xi[a-1] is the variable carrying
    label a).  The identity permutation gives 1.
    """
    out = None
    for a, b in inversion_pairs(images):
        fac = s_factor(xi[a - 1], xi[b - 1], params)
        out = fac if out is None else out * fac
    if out is None:
        return 1.0 + 0j
    return out


# ---------------------------------------------------------------------------
# integrands

@dataclass(frozen=True)
class IntegrandParams:
    """Observation site, initial configuration, time and rates."""

    x: int
    Y: Configuration
    t: float
    params: ModelParams

    def __post_init__(self) -> None:
        if self.t < 0.0:
            raise DomainError(f"time must be nonnegative, got {self.t}")


def _labels_of(S, n: int) -> tuple[int, ...]:
    if S is None:
        return tuple(range(1, n + 1))
    if isinstance(S, IndexSet):
        return S.sorted_members
    return tuple(sorted(int(i) for i in S))


def _pair_product(xi, params: ModelParams):
    """prod_{a<b} (xi_b - xi_a)/(p + q xi_a xi_b - xi_a), label order."""
    p, q = params.p, params.q
    out = None
    for a in range(len(xi)):
        for b in range(a + 1, len(xi)):
            den = _check_den(p + q * xi[a] * xi[b] - xi[a], "scattering denominator")
            fac = (xi[b] - xi[a]) / den
            out = fac if out is None else out * fac
    return out


def _site_factors(xi, labels, ip: IntegrandParams):
    """prod xi_i^(x - y_i - 1) e^(eps(xi_i) t) over the chosen labels."""
    ys = ip.Y.positions
    out = None
    for k, lab in enumerate(labels):
        fac = ipow(xi[k], ip.x - ys[lab - 1] - 1) * np.exp(epsilon(xi[k], ip.params) * ip.t)
        out = fac if out is None else out * fac
    return out


def integrand_I(S, ip: IntegrandParams, xi: Sequence):
    """Product-form integrand restricted to the labels in S (None = all).

    This is the pair product over label pairs inside S, times
    (1 - prod xi) / prod (1 - xi_i), times the per-site power/exponential
    factors with y-values read off the initial configuration at the
    labels of S.
    """
    labels = _labels_of(S, ip.Y.n)
    if len(labels) != len(xi):
        raise DomainError(f"got {len(xi)} variables for {len(labels)} labels")
    prod_xi = None
    one_minus = None
    for z in xi:
        prod_xi = z if prod_xi is None else prod_xi * z
        f = 1.0 - z
        one_minus = f if one_minus is None else one_minus * f
    front = (1.0 - prod_xi) / _check_den(one_minus, "1 - xi")
    out = front * _site_factors(xi, labels, ip)
    pair = _pair_product(xi, ip.params)
    if pair is not None:
        out = out * pair
    return out


def integrand_I_cdf(S, ip: IntegrandParams, xi: Sequence):
    """Same as integrand_I but with the (1 - prod xi) numerator removed.

    Summing the particle-position integrand over a half-line telescopes
    the geometric series (1 - prod xi)^(-1) against that numerator; this
    is the resulting survival-function integrand.
    """
    labels = _labels_of(S, ip.Y.n)
    if len(labels) != len(xi):
        raise DomainError(f"got {len(xi)} variables for {len(labels)} labels")
    one_minus = None
    for z in xi:
        f = 1.0 - z
        one_minus = f if one_minus is None else one_minus * f
    out = _site_factors(xi, labels, ip) / _check_den(one_minus, "1 - xi")
    pair = _pair_product(xi, ip.params)
    if pair is not None:
        out = out * pair
    return out


def integrand_I_TU(T: IndexSet, U: IndexSet, ip: IntegrandParams, xi: Sequence):
    """Disjoint-subset integrand with variables indexed by T union U.

    Four factors: (1 - prod_{i in U} xi_i); pairwise differences for pairs
    lying both in U or both in T over prod (1 - xi_i); the cross numerators
    (p + q xi_i xi_j - xi_i) for i in T, j in U over the full scattering
    denominator; and the per-site power/exponential factors.
    """
    if T.members & U.members:
        raise DomainError("T and U must be disjoint")
    labels = tuple(sorted(T.members | U.members))
    if len(labels) != len(xi):
        raise DomainError(f"got {len(xi)} variables for {len(labels)} labels")
    pos = {lab: k for k, lab in enumerate(labels)}
    p, q = ip.params.p, ip.params.q

    prod_u = None
    for lab in sorted(U.members):
        z = xi[pos[lab]]
        prod_u = z if prod_u is None else prod_u * z
    out = 1.0 - prod_u if prod_u is not None else 1.0 + 0j

    for group in (sorted(T.members), sorted(U.members)):
        for ii in range(len(group)):
            for jj in range(ii + 1, len(group)):
                out = out * (xi[pos[group[jj]]] - xi[pos[group[ii]]])

    one_minus = None
    for k in range(len(labels)):
        f = 1.0 - xi[k]
        one_minus = f if one_minus is None else one_minus * f
    out = out / _check_den(one_minus, "1 - xi")

    for i in sorted(T.members):
        for j in sorted(U.members):
            out = out * (p + q * xi[pos[i]] * xi[pos[j]] - xi[pos[i]])
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            out = out / _check_den(
                p + q * xi[a] * xi[b] - xi[a], "scattering denominator"
            )

    return out * _site_factors(xi, labels, ip)


def integrand_J(k: int, x: int, t: float, params: ModelParams, xi: Sequence):
    """Step-initial-condition integrand with ordered-pair products.

    The pair product runs over ordered pairs i != j, and the denominator
    gains the factors (q xi_i - p) whose pole at p/q must lie inside the
    contour.
    """
    if len(xi) != k:
        raise DomainError(f"expected {k} variables, got {len(xi)}")
    if params.q == 0.0:
        raise DomainError("step-initial-condition integrand requires q > 0")
    p, q = params.p, params.q
    out = None
    for a in range(k):
        for b in range(a + 1, k):
            diff = xi[b] - xi[a]
            num = -diff * diff  # (xi_b - xi_a)(xi_a - xi_b)
            den = _check_den(p + q * xi[a] * xi[b] - xi[a], "scattering denominator")
            den = den * _check_den(p + q * xi[a] * xi[b] - xi[b], "scattering denominator")
            fac = num / den
            out = fac if out is None else out * fac

    prod_xi = None
    den_all = None
    for z in xi:
        prod_xi = z if prod_xi is None else prod_xi * z
        f = (1.0 - z) * _check_den(q * z - p, "q xi - p")
        den_all = f if den_all is None else den_all * f
    front = (1.0 - prod_xi) / _check_den(den_all, "(1 - xi)(q xi - p)")

    tail = None
    for z in xi:
        fac = ipow(z, x - 1) * np.exp(epsilon(z, params) * t)
        tail = fac if tail is None else tail * fac
    res = front * tail
    if out is not None:
        res = res * out
    return res


def integrand_psi(z: Sequence[int], t: float, params: ModelParams, xi: Sequence):
    """Correction-term integrand with the reciprocal-product variable.

    ``z`` holds the integer exponents (initial-gap data); the auxiliary
    point w = (xi_1...xi_n)^(-1) enters both the bracket factors and the
    energy in the exponential.
    """
    n = len(xi)
    if len(z) != n:
        raise DomainError(f"expected {n} exponents, got {len(z)}")
    p, q = params.p, params.q
    prod_xi = None
    for v in xi:
        prod_xi = v if prod_xi is None else prod_xi * v
    w = 1.0 / prod_xi

    out = p ** (n * (n + 1) // 2) * np.ones_like(np.asarray(prod_xi))
    for k in range(n):
        out = out * ipow(xi[k], int(z[k]))
    pair = _pair_product(xi, params)
    if pair is not None:
        out = out * pair
    for k in range(n):
        den = _check_den(p + q * xi[k] * w - xi[k], "bracket denominator")
        out = out * (w - xi[k]) / den
    out = out / _check_den(1.0 - prod_xi, "1 - prod xi")
    one_minus = None
    for v in xi:
        f = 1.0 - v
        one_minus = f if one_minus is None else one_minus * f
    out = out / _check_den(one_minus, "1 - xi")

    energy = epsilon(w, params)
    for v in xi:
        energy = energy + epsilon(v, params)
    return out * np.exp(energy * t)
