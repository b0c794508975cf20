"""Domain errors.

Every error raised by the simulator is a ValueError so the HTTP layer can map it
to a 400 response through a single handler.
"""


class SimulationError(ValueError):
    """Base class for simulator errors"""


class DimensionMismatchError(SimulationError):
    """Operands have incompatible shapes"""


class NonHermitianError(SimulationError):
    """A matrix expected to be Hermitian is not"""


class NotPositiveSemidefiniteError(SimulationError):
    """A covariance or Gram matrix has a negative eigenvalue"""


class DuplicateHandleError(SimulationError):
    """A conic program handle was declared twice"""


class UnknownHandleError(SimulationError):
    """A conic program handle was never declared"""


class InfeasibleInitializationError(SimulationError):
    """No initial point meets the per-user rate floor"""


class RankOneExtractionError(SimulationError):
    """A lifted matrix is too far from rank one to extract a vector"""


class MalformedResultsError(SimulationError):
    """A results CSV does not match its documented schema"""


class UnknownSchemeError(SimulationError):
    """The scheme tag is not one of the supported surface variants"""
