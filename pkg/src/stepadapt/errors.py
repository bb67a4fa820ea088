"""Exception types raised across the package."""


class StepAdaptError(Exception):
    """Base class for all package errors."""


class InvalidConfig(StepAdaptError, ValueError):
    """A parameter or configuration violates its documented bounds."""


class UnsupportedQuery(StepAdaptError):
    """The noise family cannot answer the requested distributional query."""


class NonFiniteState(StepAdaptError, ArithmeticError):
    """The iterate or step size became non-finite."""


class InsufficientData(StepAdaptError, ValueError):
    """Too few points to fit or aggregate."""


class EmptySet(StepAdaptError, ValueError):
    """A set-valued operation received an empty sample."""


class ParseError(StepAdaptError):
    """The configuration text could not be parsed."""


class ValidationError(StepAdaptError, ValueError):
    """The parsed configuration failed validation."""
