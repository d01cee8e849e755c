"""Exception hierarchy.

Every numeric failure derives from :class:`NumericError` so the command line
layer can map it to a single exit code; configuration problems derive from
:class:`ConfigError`.
"""


class RwabathError(Exception):
    """Base class for all package errors."""


class NumericError(RwabathError):
    """A computation could not be carried out to the requested accuracy."""

    origin = "numeric"


class InvalidModel(NumericError, ValueError):
    origin = "model"


class NotHermitian(InvalidModel):
    origin = "linalg"


class DomainError(NumericError, ValueError):
    origin = "linalg"


class SingularLyapunov(NumericError):
    origin = "linalg"


class InvalidState(InvalidModel):
    origin = "model"


class QuadratureFailure(NumericError):
    origin = "kernels"


class DivergentLaplace(NumericError):
    origin = "kernels"


class NonSmoothOccupation(NumericError):
    origin = "kernels"


class GridMismatch(NumericError, ValueError):
    origin = "volterra"


class StepTooLarge(NumericError):
    origin = "volterra"


class HypothesisViolated(NumericError):
    origin = "bvh"


class HorizonMismatch(NumericError, ValueError):
    origin = "bvh"


class WindowTooNarrow(NumericError):
    origin = "oracle"


class DimensionTooLarge(NumericError):
    origin = "oracle"


class InvariantViolation(RwabathError):
    """A computed state failed a block density matrix invariant."""


class ConfigError(RwabathError):
    """Malformed scenario configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
