"""Position law of the m-th left-most particle.

Five finite-N evaluation routes (one-integral small-contour form for the
first particle, its large-contour subset expansion, the two-term second-
particle form, and the general-m small/large subset expansions), a
disjoint double-subset route that serves as an independent third path,
the survival function, the infinite-system series for initial data
bounded below, the step-initial-condition series, and the leftward
totally asymmetric specializations (single integral and Toeplitz
determinant).

Numerical routing notes.  The small-contour expansions are accurate for
observation sites x in the bulk and to the right; the large-contour ones
for x in the bulk and to the left -- their integrand magnitudes carry
r^(x-like) and R^(x-like) powers respectively.  The operations evaluate
exactly what their formulas state; callers pick the representation suited
to their x (tests exercise both on the overlap).
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .core import (
    Configuration,
    IndexSet,
    ModelParams,
    qbracket,
    qbracket_binom,
    sigma_positions,
    sigma_sum,
    sign_of_set,
)
from .errors import BudgetError, ConsistencyError, DomainError
from .kernel import (
    IntegrandParams,
    epsilon,
    integrand_I,
    integrand_I_TU,
    integrand_I_cdf,
    integrand_J,
    ipow,
)
from .quadrature import (
    ContourSpec,
    circle_nodes,
    integrate_torus,
    large_radius,
    small_radius,
)
from .results import EvalResult
from .summation import cfsum

#: full subset enumeration refuses beyond this N (2^N terms)
_FULL_SUM_N_CAP = 14


@dataclass(frozen=True)
class MarginalQuery:
    """Which particle, which site, which time, which rates."""

    Y: Configuration
    m: int
    x: int
    t: float
    params: ModelParams

    def __post_init__(self) -> None:
        if not (1 <= self.m <= self.Y.n):
            raise DomainError(f"particle index {self.m} outside 1..{self.Y.n}")
        if self.t < 0.0:
            raise DomainError("time must be nonnegative")


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the subset series.

    ``max_sigma`` caps the index sum of admitted subsets (or the set size
    for the step-initial-condition series); the achieved truncation bound
    is always reported, never silently dropped.
    """

    tol: float = 1e-8
    max_sigma: int = 20
    R_override: float | None = None

    def __post_init__(self) -> None:
        if self.tol <= 0.0:
            raise DomainError("tolerance must be positive")


# ---------------------------------------------------------------------------
# cached subset integrals

@functools.lru_cache(maxsize=8192)
def _subset_integral(
    labels: tuple[int, ...],
    x: int,
    y_positions: tuple[int, ...],
    t: float,
    p: float,
    contour_kind: str,  # "small" | "large"
    radius: float,
    tol: float,
):
    """One integral of the subset integrand; cached across expansion terms."""
    params = ModelParams.from_p(p)
    ip = IntegrandParams(x, Configuration(y_positions), t, params)
    d = len(labels)
    res = integrate_torus(
        lambda *xi: integrand_I(labels, ip, xi), d, ContourSpec(radius), tol
    )
    return res


def _small_r(params: ModelParams) -> float:
    return small_radius(params, 0.7)


def _resolve_R(params: ModelParams, ctrl: SeriesControl | None) -> float:
    if ctrl is not None and ctrl.R_override is not None:
        R = float(ctrl.R_override)
        if R <= 1.0:
            raise DomainError("override radius must exceed 1")
        return R
    return large_radius(params)


def _sum_terms(terms, tol):
    """Compensated reduction of (coefficient, QuadResult) expansion terms."""
    values = [c * r.value for c, r in terms]
    value = cfsum(values)
    err = math.fsum(abs(c) * r.error_estimate for c, r in terms)
    converged = all(r.converged for _, r in terms)
    nodes = max((r.nodes_used for _, r in terms), default=0)
    allowance = max(tol, 10.0 * err)
    if abs(value.imag) > allowance:
        raise ConsistencyError(f"imaginary part {value.imag:.3e} exceeds {allowance:.3e}")
    return value.real, err, converged, nodes


def _as_result(value, err, converged, nodes, imag=0.0, bound=None) -> EvalResult:
    return EvalResult(value, err, converged, nodes, imag, bound)


# ---------------------------------------------------------------------------
# first particle

def first_particle_small(mq: MarginalQuery, tol: float = 1e-10) -> EvalResult:
    """One N-fold small-contour integral for the left-most particle."""
    if mq.params.p == 0.0:
        raise DomainError("small-contour route requires p > 0; use the large-contour route")
    if mq.m != 1:
        raise DomainError("this route computes the first particle only")
    n = mq.Y.n
    labels = tuple(range(1, n + 1))
    res = _subset_integral(
        labels, mq.x, mq.Y.positions, mq.t, mq.params.p, "small", _small_r(mq.params), tol
    )
    coeff = mq.params.p ** (n * (n - 1) // 2)
    value, err, conv, nodes = _sum_terms([(coeff, res)], tol)
    return _as_result(value, err, conv, nodes)


def _nonempty_subsets(n: int) -> Iterable[tuple[int, ...]]:
    for size in range(1, n + 1):
        yield from itertools.combinations(range(1, n + 1), size)


def _large_coeff_first(labels: tuple[int, ...], params: ModelParams) -> float:
    s = sum(labels)
    k = len(labels)
    return params.p ** (s - k) / params.q ** (s - k * (k + 1) // 2)


def first_particle_large(
    mq: MarginalQuery, tol: float = 1e-10, ctrl: SeriesControl | None = None
) -> EvalResult:
    """Subset expansion over large contours for the left-most particle.

    With a ``ctrl`` the sum is truncated to subsets of index sum at most
    ``ctrl.max_sigma`` and the geometric tail surrogate is reported;
    without one the full 2^N - 1 terms are evaluated (N capped).
    """
    if mq.params.q == 0.0:
        raise DomainError("large-contour route requires q > 0; use the small-contour route")
    if mq.m != 1:
        raise DomainError("this route computes the first particle only")
    n = mq.Y.n
    if ctrl is None and n > _FULL_SUM_N_CAP:
        raise BudgetError(f"full subset sum over N={n} needs a SeriesControl truncation")
    R = _resolve_R(mq.params, ctrl)
    terms = []
    for labels in _nonempty_subsets(n):
        if ctrl is not None and sum(labels) > ctrl.max_sigma:
            continue
        res = _subset_integral(
            labels, mq.x, mq.Y.positions, mq.t, mq.params.p, "large", R, tol
        )
        terms.append((_large_coeff_first(labels, mq.params), res))
    value, err, conv, nodes = _sum_terms(terms, tol)
    bound = None
    if ctrl is not None:
        bound = _series_tail_bound(ctrl.max_sigma, R)
        conv = conv and bound <= ctrl.tol
    return _as_result(value, err, conv, nodes, bound=bound)


def first_particle_cdf(
    Y: Configuration, x: int, t: float, params: ModelParams, tol: float = 1e-10
) -> EvalResult:
    """P(the left-most particle sits at or right of x at time t).

    Direct small-contour evaluation where its dynamic range allows; for
    sites deep in the left tail (where that integrand overflows double
    headroom) the complementary large-contour subset sum is used instead:
    1 + sum_S c_S * (survival integrand over C_R), which decays instead of
    growing there.  Both are evaluations of the same survival function.
    """
    n = Y.n
    if params.p == 0.0:
        raise DomainError("survival function requires p > 0; mirror the query")
    r = _small_r(params)
    exponent = sum(x - y - 1 for y in Y.positions)
    # predicted integrand magnitude r^exponent; keep eps * magnitude << tol
    headroom_ok = exponent >= 0 or (-exponent) * math.log(1.0 / r) < math.log(tol / 5e-16)
    ip = IntegrandParams(x, Y, t, params)
    if headroom_ok or params.q == 0.0:
        if not headroom_ok:
            # q = 0: particles never move left, the survival is exactly 1
            if x <= Y.positions[0]:
                return _as_result(1.0, 0.0, True, 0)
        labels = tuple(range(1, n + 1))
        res = integrate_torus(
            lambda *xi: integrand_I_cdf(labels, ip, xi), n, ContourSpec(r), tol
        )
        coeff = params.p ** (n * (n - 1) // 2)
        value, err, conv, nodes = _sum_terms([(coeff, res)], tol)
        return _as_result(value, err, conv, nodes)
    # complementary route on large contours
    R = large_radius(params)
    terms = []
    for labels in _nonempty_subsets(n):
        res = integrate_torus(
            lambda *xi, L=labels: integrand_I_cdf(L, ip, xi),
            len(labels),
            ContourSpec(R),
            tol,
        )
        terms.append((_large_coeff_first(labels, params), res))
    value, err, conv, nodes = _sum_terms(terms, tol)
    return _as_result(1.0 + value, err, conv, nodes)


# ---------------------------------------------------------------------------
# second particle

def second_particle(mq: MarginalQuery, tol: float = 1e-10) -> EvalResult:
    """Two-term small-contour form for the second left-most particle."""
    if mq.params.p == 0.0:
        raise DomainError("small-contour route requires p > 0")
    if mq.m != 2 or mq.Y.n < 2:
        raise DomainError("this route computes the second particle (N >= 2)")
    n = mq.Y.n
    p, q = mq.params.p, mq.params.q
    r = _small_r(mq.params)
    pref = p ** ((n - 1) * (n - 2) // 2)
    terms = []
    full = tuple(range(1, n + 1))
    res = _subset_integral(full, mq.x, mq.Y.positions, mq.t, p, "small", r, tol)
    terms.append((-q * qbracket(n - 1, mq.params) * pref, res))
    for k in range(1, n + 1):
        labels = tuple(i for i in full if i != k)
        res = _subset_integral(labels, mq.x, mq.Y.positions, mq.t, p, "small", r, tol)
        terms.append((pref * (q / p) ** (k - 1), res))
    value, err, conv, nodes = _sum_terms(terms, tol)
    return _as_result(value, err, conv, nodes)


# ---------------------------------------------------------------------------
# general particle, small contours

def mth_particle_small(mq: MarginalQuery, tol: float = 1e-10) -> EvalResult:
    """Alternating subset expansion over small contours for any m.

    Terms run over subsets S with |complement| < m; the removed-index
    powers of p and q are combined with the global prefactor before
    exponentiation so the q = 0 limit stays finite term by term.
    """
    if mq.params.p == 0.0:
        raise DomainError("small-contour route requires p > 0")
    n, m = mq.Y.n, mq.m
    full = tuple(range(1, n + 1))
    r = _small_r(mq.params)
    terms = []
    for c_size in range(0, m):
        for comp in itertools.combinations(full, c_size):
            labels = tuple(i for i in full if i not in comp)
            s_c = sum(comp)
            sign = (-1.0) ** (m - 1 - c_size)
            brk = qbracket_binom(len(labels) - 1, m - c_size - 1, mq.params)
            q_exp = m * (m - 1) // 2 + s_c - m * c_size
            p_exp = (n - m) * (n - m + 1) // 2 - s_c + c_size * (c_size + 1) // 2
            coeff = sign * brk * mq.params.q**q_exp * mq.params.p**p_exp
            if coeff == 0.0:
                continue
            res = _subset_integral(
                labels, mq.x, mq.Y.positions, mq.t, mq.params.p, "small", r, tol
            )
            terms.append((coeff, res))
    value, err, conv, nodes = _sum_terms(terms, tol)
    return _as_result(value, err, conv, nodes)


# ---------------------------------------------------------------------------
# general particle, large contours

def _large_coeff_mth(labels: tuple[int, ...], m: int, params: ModelParams) -> float:
    s, k = sum(labels), len(labels)
    sign = (-1.0) ** (m + 1)
    brk = qbracket_binom(k - 1, k - m, params)
    p_exp = m * (m - 1) // 2 + s - m * k
    q_exp = m * (m - 1) // 2 - s + k * (k + 1) // 2
    return sign * brk * params.p**p_exp * params.q**q_exp


def mth_particle_large(
    mq: MarginalQuery, tol: float = 1e-10, ctrl: SeriesControl | None = None
) -> EvalResult:
    """Subset expansion over large contours for any m (N-free coefficients)."""
    if mq.params.q == 0.0:
        raise DomainError("large-contour route requires q > 0")
    n, m = mq.Y.n, mq.m
    if ctrl is None and n > _FULL_SUM_N_CAP:
        raise BudgetError(f"full subset sum over N={n} needs a SeriesControl truncation")
    R = _resolve_R(mq.params, ctrl)
    terms = []
    for size in range(m, n + 1):
        for labels in itertools.combinations(range(1, n + 1), size):
            if ctrl is not None and sum(labels) > ctrl.max_sigma:
                continue
            coeff = _large_coeff_mth(labels, m, mq.params)
            if coeff == 0.0:
                continue
            res = _subset_integral(
                labels, mq.x, mq.Y.positions, mq.t, mq.params.p, "large", R, tol
            )
            terms.append((coeff, res))
    value, err, conv, nodes = _sum_terms(terms, tol)
    bound = None
    if ctrl is not None:
        bound = _series_tail_bound(ctrl.max_sigma, R)
        conv = conv and bound <= ctrl.tol
    return _as_result(value, err, conv, nodes, bound=bound)


# ---------------------------------------------------------------------------
# general particle, double-subset route

def mth_particle_tu(mq: MarginalQuery, tol: float = 1e-10) -> EvalResult:
    """Independent third path: double sum over U (|U| = m-1) and T inside U.

    All integrals run over small contours with the mixed-subset integrand
    on T union complement(U); signs combine the crossing parity of U, the
    cardinality of T, and the position excess of U minus T inside U.
    """
    p, q = mq.params.p, mq.params.q
    if p == 0.0 or q == 0.0:
        raise DomainError("double-subset route requires p > 0 and q > 0")
    n, m = mq.Y.n, mq.m
    r = _small_r(mq.params)
    pref_p = (n - m) * (n - m + 1) // 2 + m * (m - 1) // 2
    pref_q = (m - 1) * (m - 2) // 2
    ip = IntegrandParams(mq.x, mq.Y, mq.t, mq.params)
    terms = []
    for u_members in itertools.combinations(range(1, n + 1), m - 1):
        U = IndexSet.of(u_members, n)
        sgn_u = sign_of_set(U)
        u_comp = U.complement()
        for t_size in range(0, m):
            for t_members in itertools.combinations(u_members, t_size):
                T = IndexSet.of(t_members, n)
                rest = tuple(i for i in u_members if i not in T.members)
                s_rest = sum(rest)
                pos_rest = sigma_positions(rest, u_members) if rest else 0
                sign = sgn_u * (-1.0) ** (t_size + s_rest - pos_rest)
                q_exp = pref_q + s_rest - (m - 1) * len(rest)
                p_exp = pref_p - s_rest - t_size * (m + len(rest)) // 2
                coeff = sign * p**p_exp * q**q_exp
                d = t_size + n - m + 1
                res = integrate_torus(
                    lambda *xi, T=T, U=u_comp: integrand_I_TU(T, U, ip, xi),
                    d,
                    ContourSpec(r),
                    tol,
                )
                terms.append((coeff, res))
    value, err, conv, nodes = _sum_terms(terms, tol)
    return _as_result(value, err, conv, nodes)


# ---------------------------------------------------------------------------
# infinite systems

def _series_tail_bound(max_sigma: int, R: float) -> float:
    """Geometric surrogate: sum_{k > max_sigma} 2^k R^(-k/2).

    Counts at most 2^k subsets with index sum k, each term bounded by
    R^(-k/2); honest but loose, so it is reported rather than asserted.
    """
    ratio = 2.0 / math.sqrt(R)
    if ratio >= 1.0:
        return math.inf
    return ratio ** (max_sigma + 1) / (1.0 - ratio)


def _subsets_by_sigma(max_sigma: int) -> Iterable[tuple[int, ...]]:
    """All finite subsets of {1, 2, ...} with index sum <= max_sigma."""

    def rec(smallest: int, budget: int, acc: tuple[int, ...]):
        if acc:
            yield acc
        for nxt in range(smallest, budget + 1):
            yield from rec(nxt + 1, budget - nxt, acc + (nxt,))

    yield from rec(1, max_sigma, ())


def first_particle_infinite(
    y_prefix: Sequence[int],
    x: int,
    t: float,
    params: ModelParams,
    ctrl: SeriesControl | None = None,
) -> EvalResult:
    """Left-most particle law for infinitely many particles bounded below.

    The subset series of the large-contour expansion, truncated by index
    sum; only the prefix of the initial configuration up to max_sigma
    positions is ever touched, which is why a finite prefix suffices.
    """
    ctrl = ctrl or SeriesControl()
    if params.q == 0.0:
        raise DomainError("infinite-system series requires q > 0")
    prefix = tuple(int(v) for v in y_prefix)
    if any(a >= b for a, b in zip(prefix, prefix[1:])):
        raise DomainError("prefix must be strictly increasing")
    if ctrl.max_sigma > len(prefix):
        raise DomainError(
            f"prefix of length {len(prefix)} too short for max_sigma={ctrl.max_sigma}"
        )
    R = _resolve_R(params, ctrl)
    Y = Configuration(prefix)
    terms = []
    for labels in _subsets_by_sigma(ctrl.max_sigma):
        res = _subset_integral(labels, x, prefix, t, params.p, "large", R, ctrl.tol)
        terms.append((_large_coeff_first(labels, params), res))
    value, err, conv, nodes = _sum_terms(terms, ctrl.tol)
    bound = _series_tail_bound(ctrl.max_sigma, R)
    return _as_result(value, err, conv and bound <= ctrl.tol, nodes, bound=bound)


def step_ic_mth_particle(
    m: int,
    x: int,
    t: float,
    params: ModelParams,
    ctrl: SeriesControl | None = None,
) -> EvalResult:
    """m-th particle law when every positive site starts occupied.

    One k-dimensional integral per set size k >= m; the series stops at
    the first term below tolerance (reported as the truncation estimate)
    or at the dimension cap, in which case the result is flagged.
    """
    ctrl = ctrl or SeriesControl(max_sigma=8)
    if params.q == 0.0:
        raise DomainError("step-initial-condition series requires q > 0")
    if m < 1:
        raise DomainError("particle index must be >= 1")
    p, q = params.p, params.q
    R = _resolve_R(params, ctrl)
    sign = (-1.0) ** (m + 1) * q ** (m * (m - 1) // 2)
    total = 0.0 + 0.0j
    err = 0.0
    nodes = 0
    conv_all = True
    last_term = math.inf
    k = m
    k_cap = max(m, min(ctrl.max_sigma, m + 12))
    while k <= k_cap:
        coeff = (
            sign
            / math.factorial(k)
            * qbracket_binom(k - 1, k - m, params)
            * p ** ((k - m) * (k - m + 1) // 2)
            * q ** (k * (k + 1) // 2)
        )
        if coeff != 0.0:
            try:
                res = integrate_torus(
                    lambda *xi: integrand_J(k, x, t, params, xi),
                    k,
                    ContourSpec(R),
                    ctrl.tol,
                )
            except BudgetError:
                conv_all = False
                break
            term = coeff * res.value
            total += term
            err += abs(coeff) * res.error_estimate
            nodes = max(nodes, res.nodes_used)
            conv_all = conv_all and res.converged
            last_term = abs(term)
        else:
            last_term = 0.0
        if last_term < ctrl.tol and k > m:
            break
        k += 1
    converged = conv_all and last_term < ctrl.tol
    allowance = max(ctrl.tol, 10.0 * err)
    if abs(total.imag) > allowance:
        raise ConsistencyError(f"imaginary part {total.imag:.3e} exceeds {allowance:.3e}")
    value = total.real
    return _as_result(value, err, converged, nodes, total.imag, min(last_term, 1.0))


# ---------------------------------------------------------------------------
# leftward totally asymmetric specializations

def _tasep_left_guard(params: ModelParams) -> None:
    if params.p != 0.0:
        raise DomainError("leftward specialization requires p = 0")


def tasep_left_mth_pmf(m: int, x: int, t: float, params: ModelParams, tol: float = 1e-10) -> EvalResult:
    """Step initial data, leftward-only rates: the single surviving term.

    An m-fold integral with the squared pairwise-difference product over a
    large contour; support is x <= m.
    """
    _tasep_left_guard(params)
    if m < 1:
        raise DomainError("particle index must be >= 1")
    R = large_radius(params)
    pref = (-1.0) ** (m * (m - 1) // 2) / math.factorial(m)

    def f(*xi):
        out = None
        for a in range(m):
            for b in range(a + 1, m):
                d = xi[b] - xi[a]
                out = d * d if out is None else out * d * d
        prod = None
        for z in xi:
            prod = z if prod is None else prod * z
        res = prod - 1.0
        for z in xi:
            res = res / ipow(z - 1.0, m)
        for z in xi:
            res = res * ipow(z, x - m - 1) * np.exp((z - 1.0) * t)
        return res if out is None else res * out

    res = integrate_torus(f, m, ContourSpec(R), tol)
    value, err, conv, nodes = _sum_terms([(pref, res)], tol)
    return _as_result(value, err, conv, nodes)


def tasep_left_mth_cdf(m: int, x: int, t: float, params: ModelParams, tol: float = 1e-10) -> EvalResult:
    """Distribution function of the same law as a Toeplitz determinant.

    Entries are one-dimensional integrals c_d = integral of
    xi^(x+d-1) (xi-1)^(-m) e^((xi-1)t), d = i - j; the column-reversed
    (Toeplitz) arrangement absorbs the sign prefactor of the m-fold form.
    """
    _tasep_left_guard(params)
    if m < 1:
        raise DomainError("particle index must be >= 1")
    R = large_radius(params)

    def entries_at(nodes_m: int) -> dict[int, complex]:
        xi = circle_nodes(R, nodes_m)
        base = ipow(xi, x - 1) / ipow(xi - 1.0, m) * np.exp((xi - 1.0) * t) * xi
        out = {}
        for d in range(-(m - 1), m):
            out[d] = complex((base * ipow(xi, d)).sum()) / nodes_m
        return out

    def det_from(ent: dict[int, complex]) -> complex:
        mat = np.array([[ent[i - j] for j in range(m)] for i in range(m)])
        if m == 1:
            return complex(mat[0, 0])
        lu, piv = scipy.linalg.lu_factor(mat)
        det = complex(np.prod(np.diag(lu)))
        det *= (-1) ** int(np.sum(piv != np.arange(m)))
        return det

    prev = det_from(entries_at(32))
    nodes_m = 64
    converged = False
    while True:
        value = det_from(entries_at(nodes_m))
        err = abs(value - prev)
        if err <= tol * max(1.0, abs(value)):
            converged = True
            break
        if nodes_m >= 1024:
            break
        prev = value
        nodes_m *= 2
    allowance = max(tol, 10.0 * err)
    if abs(value.imag) > allowance:
        raise ConsistencyError(f"imaginary part {value.imag:.3e} exceeds {allowance:.3e}")
    return _as_result(value.real, err, converged, nodes_m)
