"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): bad inputs
(:class:`ValidationError`) and numerical breakdowns (:class:`NumericalError`).
"""


class AoiError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AoiError, ValueError):
    """Inputs violate a precondition."""


class DomainError(ValidationError):
    """Argument outside the domain of a mathematical function."""


class InstabilityError(ValidationError):
    """Queue utilization is not strictly below one."""


class TotalLossError(ValidationError):
    """Drop probability of one: no update is ever delivered."""


class ParameterRegimeError(ValidationError):
    """Derived channel quantity fell outside its admissible range."""

    def __init__(self, message, name=None, value=None):
        super().__init__(message)
        self.name = name
        self.value = value


class SingularCorrelationError(ParameterRegimeError):
    """Fading correlation of magnitude one makes the Markov model undefined."""


class EventError(ValidationError):
    """Malformed controller event."""


class NumericalError(AoiError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""


class EvaluationError(NumericalError):
    """Objective returned a non-finite value during minimization."""

    def __init__(self, message, abscissa):
        super().__init__(message)
        self.abscissa = abscissa


class UnboundedIntensityError(NumericalError):
    """Intensity function is unbounded (or non-finite) on the lookahead window."""


class DivergenceError(NumericalError):
    """Simulated queue length exceeded the configured guard."""


class NoDeliveryError(ValidationError):
    """Simulation configured so that no update can ever be delivered."""
