"""Full N-particle transition probabilities.

The N!-term permutation sum of contour integrals is evaluated directly
(one node-doubling ladder per permutation, compensated reduction over the
permutation sum), with three practical layers on top:

* a totally-asymmetric specialization that collapses the sum into an
  N x N determinant of one-dimensional integrals,
* the mirror duality P_Y(X;t) = P~_{Y^-}(X^-;t) with p and q swapped,
  used both as an operation in its own right and as a numerical router
  (the direct small-contour sum loses precision for final configurations
  far to the LEFT of the initial one; the mirrored evaluation is then
  well-conditioned),
* a bulk evaluator that computes the whole table of transition
  probabilities over a window at once via FFT coefficient extraction --
  arithmetic identical to the per-configuration trapezoid rule, just
  batched -- which makes window sums affordable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import Configuration, ModelParams
from .errors import BudgetError, ConsistencyError, DomainError
from .kernel import bethe_amplitude, epsilon, ipow
from .quadrature import ContourSpec, circle_nodes, integrate_torus, small_radius
from .results import EvalResult
from .summation import cfsum

#: permutation-sum evaluations refuse above this N without an override
DEFAULT_N_CAP = 5


@dataclass(frozen=True)
class TransitionQuery:
    """Initial configuration Y, final configuration X, time, rates."""

    Y: Configuration
    X: Configuration
    t: float
    params: ModelParams

    def __post_init__(self) -> None:
        if self.Y.n != self.X.n:
            raise DomainError("initial and final configurations differ in size")
        if self.t < 0.0:
            raise DomainError("time must be nonnegative")


def dual_query(query: TransitionQuery) -> TransitionQuery:
    """Mirror the query through the origin and swap the hop rates."""
    return TransitionQuery(
        query.Y.reflected(), query.X.reflected(), query.t, query.params.swapped()
    )


def _sigma_integrand(images, x_sites, Y: Configuration, t, params):
    """Integrand of one permutation term, as a grid-evaluable closure."""
    ys = Y.positions
    n = len(ys)
    inv = [0] * n
    for i, lab in enumerate(images):
        inv[lab - 1] = i

    def f(*xi):
        out = bethe_amplitude(images, xi, params)
        for j in range(n):
            expo = x_sites[inv[j]] - ys[j] - 1
            out = out * ipow(xi[j], expo) * np.exp(epsilon(xi[j], params) * t)
        return out

    return f


def bethe_sum_value(
    Y: Configuration,
    X: Sequence[int],
    t: float,
    params: ModelParams,
    tol: float = 1e-10,
    safety: float = 0.7,
):
    """Permutation sum of contour integrals at an arbitrary X in Z^N.

    X need not be ordered: the sum solves the lattice master equation on
    all of Z^N, which is exactly what the boundary-condition and
    derivative cross-checks need.  Returns (complex value, error,
    converged, nodes).
    """
    if params.p == 0.0:
        raise DomainError("small-contour transition formula requires p > 0; use duality")
    n = Y.n
    x_sites = tuple(int(v) for v in X)
    if len(x_sites) != n:
        raise DomainError("X has wrong length")
    contour = ContourSpec(small_radius(params, safety))
    values = []
    err = 0.0
    converged = True
    nodes = 0
    for images in itertools.permutations(range(1, n + 1)):
        res = integrate_torus(_sigma_integrand(images, x_sites, Y, t, params), n, contour, tol)
        values.append(res.value)
        err += res.error_estimate
        converged = converged and res.converged
        nodes = max(nodes, res.nodes_used)
    return cfsum(values), err, converged, nodes


def _finalize_real(value: complex, err: float, tol: float) -> float:
    """Imaginary-part policy: the exact value is real, so a stray imaginary
    part beyond tolerance signals a broken evaluation, as does a
    substantially negative probability."""
    allowance = max(tol, 10.0 * err)
    if abs(value.imag) > allowance:
        raise ConsistencyError(f"imaginary part {value.imag:.3e} exceeds {allowance:.3e}")
    real = value.real
    if real < 0.0:
        if -real <= allowance:
            return 0.0
        raise ConsistencyError(f"probability {real:.3e} negative beyond tolerance")
    return real


def transition_probability(
    query: TransitionQuery,
    tol: float = 1e-10,
    *,
    n_cap: int = DEFAULT_N_CAP,
    allow_large_n: bool = False,
    route: str = "auto",
) -> EvalResult:
    """P(final configuration X at time t | initial configuration Y).

    ``route='auto'`` evaluates through the mirrored process whenever the
    final configuration sits left of the initial one (sum X < sum Y) and
    q > 0: both routes compute the same number, but each is numerically
    accurate on its own side.  ``route='direct'`` forces the literal
    evaluation, ``route='dual'`` forces the mirrored one.
    """
    if query.params.p == 0.0 and route != "dual":
        raise DomainError("small-contour transition formula requires p > 0; use duality")
    n = query.Y.n
    if n > n_cap and not allow_large_n:
        raise BudgetError(
            f"N={n} exceeds the cap {n_cap} (cost grows like N! M^N); "
            "pass allow_large_n=True to override"
        )
    if route == "auto":
        leftward = sum(query.X.positions) < sum(query.Y.positions)
        route = "dual" if (leftward and query.params.q > 0.0) else "direct"
    if route == "dual":
        if query.params.q == 0.0:
            raise DomainError("dual route needs q > 0")
        query = dual_query(query)
    elif route != "direct":
        raise DomainError(f"unknown route {route!r}")
    value, err, converged, nodes = bethe_sum_value(
        query.Y, query.X.positions, query.t, query.params, tol
    )
    real = _finalize_real(value, err, tol)
    return EvalResult(real, err, converged, nodes, value.imag)


# ---------------------------------------------------------------------------
# totally asymmetric determinant

def _entry_rule(j_minus_i: int, x: int, y: int, t: float, params: ModelParams, radius: float, m: int) -> complex:
    xi = circle_nodes(radius, m)
    vals = ipow(1.0 - xi, j_minus_i) * ipow(xi, x - y - 1) * np.exp(epsilon(xi, params) * t) * xi
    return complex(vals.sum()) / m


def tasep_transition_determinant(query: TransitionQuery, tol: float = 1e-10) -> EvalResult:
    """Rightward-only transition probability as a determinant.

    Valid only at p = 1, where the permutation amplitudes factor and the
    sum collapses to det of one-dimensional contour integrals; entries
    share a common node ladder so the determinant gets a doubling-based
    error estimate of its own.
    """
    params = query.params
    if params.p != 1.0:
        raise DomainError("determinant specialization requires p = 1")
    n = query.Y.n
    xs, ys = query.X.positions, query.Y.positions
    radius = small_radius(params, 0.5)

    def det_at(m: int) -> complex:
        mat = np.empty((n, n), dtype=np.complex128)
        for i in range(n):
            for j in range(n):
                mat[i, j] = _entry_rule(j - i, xs[i], ys[j], query.t, params, radius, m)
        lu, piv = scipy.linalg.lu_factor(mat)
        det = complex(np.prod(np.diag(lu)))
        det *= (-1) ** int(np.sum(piv != np.arange(n)))
        return det

    prev = det_at(16)
    m = 32
    converged = False
    while True:
        value = det_at(m)
        err = abs(value - prev)
        if err <= tol * max(1.0, abs(value)):
            converged = True
            break
        if m >= 512:
            break
        prev = value
        m *= 2
    real = _finalize_real(value, err, tol)
    return EvalResult(real, err, converged, m, value.imag)


# ---------------------------------------------------------------------------
# bulk window tables

@dataclass(frozen=True)
class GridResult:
    """Transition probabilities for every ordered tuple in a window."""

    probs: dict[tuple[int, ...], float]
    error_estimate: float
    nodes_used: int
    converged: bool
    max_imag: float


def _fft_table(Y: Configuration, t, params, cells: np.ndarray, m: int) -> np.ndarray:
    """All permutation-sum trapezoid values at once via inverse FFT.

    The M-node rule evaluates each probability as a Laurent coefficient
    of the permutation integrand; an inverse FFT reads off every
    coefficient of the same grid simultaneously, so this is bit-for-bit
    the same arithmetic as the per-configuration rule, batched.
    """
    n = Y.n
    # at q = 0 the unreachable cells are masked exactly, so dynamic range
    # is a non-issue and the smaller radius doubles the pole clearance
    r = small_radius(params, 0.5 if params.q == 0.0 else 0.7)
    nodes = circle_nodes(r, m)
    shaped = [nodes.reshape((1,) * j + (m,) + (1,) * (n - 1 - j)) for j in range(n)]
    base = np.ones((1,) * n, dtype=np.complex128)
    for j in range(n):
        fac = ipow(nodes, -Y.positions[j] - 1) * np.exp(epsilon(nodes, params) * t) * nodes
        base = base * fac.reshape((1,) * j + (m,) + (1,) * (n - 1 - j))
    acc = np.zeros(len(cells), dtype=np.complex128)
    for images in itertools.permutations(range(1, n + 1)):
        inv = [0] * n
        for i, lab in enumerate(images):
            inv[lab - 1] = i
        hat = np.fft.ifftn(bethe_amplitude(images, shaped, params) * base)
        idx = tuple((cells[:, inv[j]] % m) for j in range(n))
        acc += hat[idx]
    # the radius part of the x-powers; the -y-1 part is already inside base
    scale = np.exp(cells.sum(axis=1).astype(np.float64) * math.log(r))
    return acc * scale


def transition_grid(
    Y: Configuration,
    t: float,
    params: ModelParams,
    window: tuple[int, int],
    tol: float = 1e-10,
) -> GridResult:
    """Transition probabilities for all configurations inside a window.

    Each cell is evaluated on its numerically favorable side: directly
    when the final configuration is not left of the initial one, through
    the mirrored process otherwise.  Totally asymmetric rates instead get
    an exact zero mask on the unreachable cells.
    """
    lo, hi = window
    if lo > hi:
        raise DomainError("empty window")
    n = Y.n
    cells = np.array(
        list(itertools.combinations(range(lo, hi + 1), n)), dtype=np.int64
    )
    if len(cells) == 0:
        raise DomainError("window holds no configuration of this size")
    ys = np.array(Y.positions)

    use_direct = np.ones(len(cells), dtype=bool)
    reachable = np.ones(len(cells), dtype=bool)
    if params.p == 1.0:
        reachable = np.all(cells >= ys, axis=1)
    elif params.p == 0.0:
        reachable = np.all(cells <= ys, axis=1)
        use_direct[:] = False
    elif params.q > 0.0:
        use_direct = cells.sum(axis=1) >= int(ys.sum())

    cells_dual = -cells[:, ::-1]
    y_dual = Y.reflected()
    dual_params = params.swapped()

    ladder = (64, 128, 256) if n <= 2 else (64, 128)
    prev = None
    err = math.inf
    converged = False
    table = None
    for m in ladder:
        table = np.zeros(len(cells), dtype=np.complex128)
        if use_direct.any():
            table[use_direct] = _fft_table(Y, t, params, cells[use_direct], m)
        dual_mask = reachable & ~use_direct
        if dual_mask.any():
            table[dual_mask] = _fft_table(y_dual, t, dual_params, cells_dual[dual_mask], m)
        table[~reachable] = 0.0
        if prev is not None:
            err = float(np.max(np.abs(table - prev)))
            if err <= tol:
                converged = True
                break
        prev = table
    max_imag = float(np.max(np.abs(table.imag)))
    if max_imag > max(tol, 10.0 * (0.0 if err is math.inf else err)):
        raise ConsistencyError(f"table imaginary part {max_imag:.3e} over tolerance")
    vals = table.real.copy()
    vals[(vals < 0.0) & (vals > -max(tol, 10.0 * min(err, 1.0)))] = 0.0
    probs = {tuple(int(v) for v in c): float(p) for c, p in zip(cells, vals)}
    return GridResult(probs, err, m, converged, max_imag)
