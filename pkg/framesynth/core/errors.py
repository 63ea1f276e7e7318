"""Exception hierarchy shared by the library and the command-line front end."""

from typing import Optional, TYPE_CHECKING

if TYPE_CHECKING:
    from .models import FeasibilityReport


class FrameSynthError(Exception):
    """Base class for every error raised by framesynth."""

    exit_code = 1


class InputError(FrameSynthError, ValueError):
    """Malformed or out-of-contract input."""

    exit_code = 1


class EmptyInput(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class InvalidWeights(InputError):
    """A weight or norm is zero, negative, non-finite or outside its allowed range."""


class BadDimension(InputError):
    pass


class PreconditionViolated(InputError):
    pass


class ProblemFileError(InputError):
    """A problem or decomposition file could not be read or validated."""


class InfeasibleError(FrameSynthError):
    """The requested object does not exist mathematically."""

    exit_code = 2


class Infeasible(InfeasibleError):
    """The weights fail the partial-sum condition against the spectrum."""

    def __init__(self, message: str, report: Optional["FeasibilityReport"] = None):
        super().__init__(message)
        self.report = report


class FFIViolated(InfeasibleError):
    """The norms violate the fundamental frame inequality."""

    def __init__(self, message: str, frame_bound: float):
        super().__init__(message)
        self.frame_bound = frame_bound


class NoPolygon(InfeasibleError):
    pass


class NotPositive(InfeasibleError):
    """The operator has an eigenvalue below the negative PSD tolerance."""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class Stalled(InfeasibleError):
    """Block planning consumed its budget of stream values without progress."""

    def __init__(self, message: str, prefix_length: int):
        super().__init__(message)
        self.prefix_length = prefix_length


class NumericalError(FrameSynthError):
    """A numerical routine failed or produced an inconsistent result."""

    exit_code = 3


class NonConvergence(NumericalError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class BlockInfeasible(NumericalError):
    """A planned streaming block failed its feasibility check (internal invariant)."""


class VerificationFailed(NumericalError):
    pass
