"""Exception types shared across the package.

Every error raised by the library derives from ClustclassError so callers
(and the CLI) can catch one base class and still report a category.
"""


class ClustclassError(Exception):
    """Base class for all library errors."""


class ParseError(ClustclassError):
    """Malformed input file (carries a line number where applicable)."""


class SchemaError(ClustclassError):
    """Input columns or values do not match the expected schema."""


class ImputationError(ClustclassError):
    """A feature cannot be imputed (no observed values)."""


class LeakageError(ClustclassError):
    """A record at or after the target year would leak future information."""


class ConfigError(ClustclassError):
    """Invalid configuration (quantization scheme, generator settings, ...)."""


class SolverError(ClustclassError):
    """Optimizer failed to reach the requested tolerance.

    Carries the best iterate found and its residual so callers can inspect
    how close the solver got.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class InfeasibilityError(ClustclassError):
    """A supposedly feasible point violates a hard constraint."""


class FitError(ClustclassError):
    """Model fitting preconditions violated (e.g. a class is absent)."""


class MetricError(ClustclassError):
    """Metric preconditions violated (e.g. one class absent from labels)."""


class StratificationError(ClustclassError):
    """Stratified folds cannot be formed with both classes in every fold."""


class EnumerationSizeError(ClustclassError):
    """Exact enumeration would exceed the configured cap."""


class InvariantViolationError(ClustclassError):
    """A runtime invariant guaranteed by the algorithm was violated."""


class DegenerateTestError(ClustclassError):
    """A statistical test is degenerate (pooled proportion 0 or 1)."""
