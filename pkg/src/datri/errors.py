"""Exception and warning types raised across the package."""


class DatriError(Exception):
    """Base class for every error raised by datri."""


class InvalidInputError(DatriError, ValueError):
    """An argument violates an operation's precondition."""


class SchemaError(InvalidInputError):
    """A space document does not conform to the space-file schema."""


class JacobiIdentityError(InvalidInputError):
    """Structure constants fail the Jacobi identity."""


class MetricError(InvalidInputError):
    """The inner product is not symmetric positive-definite."""


class StepSizeError(DatriError):
    """An integrator invariant drifted beyond tolerance; use a smaller step."""


class ConjugatePointError(DatriError):
    """A Jacobi endomorphism became singular before the requested radius."""

    def __init__(self, message, last_safe_radius=None):
        super().__init__(message)
        self.last_safe_radius = last_safe_radius


class NumericalDegradationWarning(UserWarning):
    """Results were produced but lost more digits than expected."""
