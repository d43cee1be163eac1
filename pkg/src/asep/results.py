"""Result containers shared by the probability-evaluating operations."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class EvalResult:
    """A real probability (or expectation) with accuracy metadata.

    ``error`` is the a-posteriori quadrature estimate propagated from the
    node-doubling ladder; ``imag`` records the discarded imaginary part,
    which doubles as a convergence diagnostic since every exact value is
    real.  ``truncation_bound`` is set only by the infinite-series
    operations and reports the bound actually achieved, never a claim.
    """

    value: float
    error: float
    converged: bool
    nodes: int = 0
    imag: float = 0.0
    truncation_bound: float | None = None
