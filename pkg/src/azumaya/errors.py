"""Exception hierarchy.

Validation-type failures (bad input, violated hypotheses, evaluation outside
a function's domain) derive from :class:`ValidationError`; failures of the
numerical machinery itself derive from :class:`NumericalError`. The CLI maps
the two families to distinct exit codes.
"""


class AzumayaError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AzumayaError, ValueError):
    """Input is malformed or violates a stated precondition."""


class ParseError(ValidationError):
    """Expression text could not be parsed."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class DomainError(ValidationError):
    """An expression was evaluated outside the domain of one of its nodes."""

    def __init__(self, node, argument, reason):
        super().__init__(f"{reason}: {node} evaluated at argument {argument!r}")
        self.node = node
        self.argument = argument


class ShapeError(ValidationError):
    """Jets, tuples or polynomials with incompatible shapes were combined."""


class HypothesisError(ValidationError):
    """A matrix tuple fails the commuting or real-spectrum hypothesis."""


class NumericalError(AzumayaError):
    """The numerical machinery failed (eigensolver, clustering, conditioning)."""


class EigensolverError(NumericalError):
    pass


class ClusteringError(NumericalError):
    """Joint eigenvalues could not be separated into consistent blocks."""


class ConditioningWarning(UserWarning):
    """The block basis used for a decomposition is badly conditioned."""
