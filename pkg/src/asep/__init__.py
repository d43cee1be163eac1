"""Numerical engine for exclusion-process contour-integral formulas."""

__version__ = "0.1.0"

from .core import (
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
from .errors import (
    AsepError,
    BudgetError,
    ConsistencyError,
    ConvergenceError,
    DomainError,
    EvaluationError,
    PoleError,
    RangeError,
)
from .quadrature import ContourSpec, QuadResult, integrate_torus, large_radius, small_radius

__all__ = [
    "__version__",
    "Configuration",
    "IndexSet",
    "ModelParams",
    "qbracket",
    "qbracket_binom",
    "qbracket_factorial",
    "sigma_positions",
    "sigma_sum",
    "sign_of_set",
    "AsepError",
    "BudgetError",
    "ConsistencyError",
    "ConvergenceError",
    "DomainError",
    "EvaluationError",
    "PoleError",
    "RangeError",
    "ContourSpec",
    "QuadResult",
    "integrate_torus",
    "large_radius",
    "small_radius",
]
