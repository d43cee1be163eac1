"""Expected position of the left-most particle and its correction terms.

The expectation splits into the free drift (p - q) t + y_1 minus a sum of
correction integrals over small contours; the one-dimensional correction
has a closed form in modified Bessel functions which serves as the oracle
for the quadrature path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Configuration, ModelParams
from .errors import BudgetError, ConsistencyError, DomainError, RangeError
from .kernel import integrand_psi
from .quadrature import ContourSpec, integrate_torus, small_radius
from .results import EvalResult

#: correction integrals refuse beyond this dimension (sample budget)
_PSI_DIM_CAP = 4

_BESSEL_SERIES_CUTOFF = 30.0
_BESSEL_X_MAX = 600.0
_BESSEL_N_MAX = 10**4


def bessel_i(n: int, x: float) -> float:
    """Modified Bessel function of the first kind, integer order.

    Power series below x = 30, Miller downward recurrence with the
    e^x = I_0 + 2 sum I_k normalization above.  I_{-n} = I_n.
    """
    n = abs(int(n))
    if n > _BESSEL_N_MAX:
        raise RangeError(f"order {n} beyond supported range {_BESSEL_N_MAX}")
    if x < 0.0:
        raise DomainError("argument must be nonnegative")
    if x > _BESSEL_X_MAX:
        raise RangeError(f"argument {x} would overflow (max {_BESSEL_X_MAX})")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x <= _BESSEL_SERIES_CUTOFF:
        # sum_k (x/2)^(n+2k) / (k! (n+k)!), first term via lgamma to dodge
        # intermediate overflow/underflow at large n
        half = x / 2.0
        log_first = n * math.log(half) - math.lgamma(n + 1)
        if log_first < -745.0:
            return 0.0
        term = math.exp(log_first)
        total = term
        k = 0
        while True:
            k += 1
            term *= half * half / (k * (n + k))
            total += term
            if term < 1e-18 * total or k > 500:
                break
        return total
    return _bessel_miller(n, x)


def _bessel_miller(n: int, x: float) -> float:
    start = max(n, int(x)) + int(40 + 2.0 * math.sqrt(max(n, int(x))))
    vals = [0.0] * (start + 2)
    vals[start] = 1e-300
    for k in range(start, 0, -1):
        vals[k - 1] = vals[k + 1] + (2.0 * k / x) * vals[k]
        if vals[k - 1] > 1e250:
            for j in range(k - 1, start + 2):
                vals[j] *= 1e-250
    s = vals[0] + 2.0 * math.fsum(vals[1 : start + 1])
    return vals[n] * math.exp(x) / s


@dataclass(frozen=True)
class BesselTable:
    """I_n(x) for n in [-n_max, n_max] (symmetric in n)."""

    argument: float
    n_max: int
    values: tuple[float, ...]  # index k holds I_k, k = 0..n_max

    def get(self, n: int) -> float:
        n = abs(n)
        if n > self.n_max:
            raise DomainError(f"order {n} beyond table range {self.n_max}")
        return self.values[n]

    def recurrence_residual(self) -> float:
        """Max residual of I_{k-1} - I_{k+1} = (2k/x) I_k over the table."""
        x = self.argument
        if x == 0.0 or self.n_max < 2:
            return 0.0
        worst = 0.0
        for k in range(1, self.n_max - 1):
            lhs = self.values[k - 1] - self.values[k + 1]
            rhs = (2.0 * k / x) * self.values[k]
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(self.values[k - 1])))
        return worst


def bessel_table(n_max: int, x: float) -> BesselTable:
    return BesselTable(x, n_max, tuple(bessel_i(k, x) for k in range(n_max + 1)))


def psi1_bessel(z: int, t: float, params: ModelParams) -> float:
    """Closed form of the one-dimensional correction integral.

    2pt e^{-2t} [I_{z-1} + I_z](2t) + (2z-1) p { e^{-2t} I_0(2t)/2 - 1/2
    + e^{-2t} sum_{j=1}^{z-1} I_j(2t) }, empty sum for z = 1.
    """
    if z < 1:
        raise DomainError(f"gap exponent must be >= 1, got {z}")
    p = params.p
    tab = bessel_table(z + 1, 2.0 * t)
    damp = math.exp(-2.0 * t)
    first = 2.0 * p * t * damp * (tab.get(z - 1) + tab.get(z))
    inner = 0.5 * damp * tab.get(0) - 0.5 + damp * math.fsum(
        tab.get(j) for j in range(1, z)
    )
    return first + (2 * z - 1) * p * inner


def _psi_radius(j: int, params: ModelParams) -> float:
    """Contour radius for the j-dimensional correction integral.

    Besides the usual scattering-pole constraint we must keep the poles
    introduced by the reciprocal-product argument outside: they demand
    q r^-(j-1) - p > r, an upper bound on r found by bisection.
    """
    r = small_radius(params, 0.5)
    q, p = params.q, params.p
    if j >= 2 and q > 0.0:
        lo, hi = 1e-6, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if q * mid ** (1 - j) - p > mid:
                lo = mid
            else:
                hi = mid
        r = min(r, 0.5 * lo)
    if r ** j < 1e-200:
        raise BudgetError("contour radius underflows the product variable")
    return r


def psi_integral(
    j: int,
    z: tuple[int, ...] | list[int],
    t: float,
    params: ModelParams,
    tol: float = 1e-10,
) -> EvalResult:
    """Quadrature of the j-dimensional correction integrand.

    ``z`` holds the gap exponents in the order they multiply the
    variables (z_i pairs with xi_i); they must be positive.
    """
    if params.p == 0.0:
        raise DomainError("correction integrals require p > 0")
    if j < 1:
        raise DomainError("dimension must be >= 1")
    if j > _PSI_DIM_CAP:
        raise BudgetError(f"correction integral refuses dimension {j} > {_PSI_DIM_CAP}")
    zz = tuple(int(v) for v in z)
    if len(zz) != j:
        raise DomainError(f"expected {j} exponents, got {len(zz)}")
    if any(v < 1 for v in zz):
        raise DomainError(f"gap exponents must be positive, got {zz}")
    r = _psi_radius(j, params)
    res = integrate_torus(
        lambda *xi: integrand_psi(zz, t, params, xi),
        j,
        ContourSpec(r),
        tol,
    )
    if abs(res.value.imag) > max(tol, 10.0 * res.error_estimate):
        raise ConsistencyError(
            f"correction integral has imaginary part {res.value.imag:.3e}"
        )
    return EvalResult(
        res.value.real, res.error_estimate, res.converged, res.nodes_used, res.value.imag
    )


def expected_first_particle(
    Y: Configuration,
    t: float,
    params: ModelParams,
    tol: float = 1e-8,
) -> EvalResult:
    """E(position of the left-most particle at time t).

    (p - q) t + y_1 minus one correction integral per gap block; the j-th
    correction takes the exponents (y_{j+1} - y_1, ..., y_{j+1} - y_j).
    """
    if params.p == 0.0:
        raise DomainError("expected-position formula requires p > 0")
    n = Y.n
    if n - 1 > _PSI_DIM_CAP:
        raise BudgetError(
            f"expectation needs correction dimension {n - 1} > {_PSI_DIM_CAP}"
        )
    drift = (params.p - params.q) * t + Y.positions[0]
    if n == 1:
        return EvalResult(drift, 0.0, True)
    total_err = 0.0
    corr = 0.0
    worst_imag = 0.0
    converged = True
    nodes = 0
    for j in range(1, n):
        zz = tuple(Y.positions[j] - Y.positions[i] for i in range(j))
        res = psi_integral(j, zz, t, params, tol)
        corr += res.value
        total_err += res.error
        worst_imag = max(worst_imag, abs(res.imag))
        converged = converged and res.converged
        nodes = max(nodes, res.nodes)
    return EvalResult(drift - corr, total_err, converged, nodes, worst_imag)
