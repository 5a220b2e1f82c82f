"""Exception hierarchy shared by all modules."""


class PathintError(Exception):
    """Base class for library errors."""


class ValidationError(PathintError, ValueError):
    """Input violates a documented precondition."""


class ConfigError(ValidationError):
    """Inconsistent configuration, e.g. a fractional order outside its admissible window."""


class AssumptionViolated(ValidationError):
    """A theorem hypothesis checked by the library does not hold."""


class RegimeError(ValidationError):
    """The driving path is outside the regime an experiment is defined for."""


class SizeError(ValidationError):
    """Problem size exceeds a configured cost guard."""


class NumericError(PathintError, ArithmeticError):
    """Numerical failure: non-finite intermediates or non-convergent quadrature."""


class GenerationError(NumericError):
    """Path simulation produced non-finite output."""
