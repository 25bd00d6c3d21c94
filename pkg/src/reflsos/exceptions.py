"""Exception hierarchy shared by every module of the package."""


class ReflSOSError(Exception):
    """Base class for all errors raised by :mod:`reflsos`."""


class DomainError(ReflSOSError, ValueError):
    """An argument is non-finite or otherwise outside the function domain."""


class InvalidNomeError(ReflSOSError, ValueError):
    """The elliptic nome violates ``|p| < 1``."""


class NearPoleError(ReflSOSError, ArithmeticError):
    """A denominator fell below the relative near-zero threshold.

    Attributes
    ----------
    factor : str
        Human-readable name of the vanishing factor, e.g. ``"h(theta)"``.
    value : complex
        The offending value of the factor.
    """

    def __init__(self, factor, value=None, message=None):
        self.factor = factor
        self.value = value
        if message is None:
            message = f"near-pole: {factor} = {value!r} is numerically zero"
        super().__init__(message)


class ValidationError(ReflSOSError, ValueError):
    """Model parameters are malformed or non-generic."""


class GenericityError(ValidationError):
    """Model parameters hit one or more non-generic points.

    ``violations`` lists ``(name, value)`` pairs, one per vanished factor.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = ", ".join(f"{name}={value:.3g}" for name, value in self.violations)
        super().__init__(f"genericity violated: {lines}")


class InconclusiveError(ReflSOSError, RuntimeError):
    """A sampled check could not evaluate any of its sample points."""


class GenerationError(ReflSOSError, RuntimeError):
    """Random parameter generation exhausted its retry budget."""
