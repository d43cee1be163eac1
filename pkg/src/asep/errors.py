"""Exception hierarchy shared by all engine modules.

The CLI maps these onto its exit-code contract: domain/precondition
failures exit 2, convergence or budget failures exit 3, internal
inconsistencies (e.g. an imaginary part that should have vanished)
exit 4.
"""


class AsepError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AsepError, ValueError):
    """Inputs violate a documented precondition (exit code 2)."""


class RangeError(DomainError):
    """Input is formally valid but outside the representable range."""


class PoleError(AsepError):
    """A denominator came within 1e-14 of zero on the contour.

    Always indicates a misconfigured contour radius, never a transient
    numeric issue, hence a hard error rather than an Inf.
    """


class EvaluationError(AsepError):
    """An integrand sample produced NaN/Inf (exit code 4)."""


class ConvergenceError(AsepError):
    """The node-doubling ladder hit its cap before tolerance (exit 3)."""


class BudgetError(ConvergenceError):
    """A computation would exceed its configured sample/size budget."""


class ConsistencyError(AsepError):
    """A value failed an internal cross-check (exit code 4)."""
