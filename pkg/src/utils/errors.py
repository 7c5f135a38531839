"""
Exception hierarchy for the Green's function toolkit

Usage and configuration problems map to exit code 2, numerical failures to exit code 1.
"""

from typing import Optional, Tuple


class GreenToolkitError(Exception):
    """Base class for toolkit errors"""

    exit_code = 1


class ConfigError(GreenToolkitError):
    """Invalid or incomplete configuration"""

    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class DimensionMismatchError(GreenToolkitError, ValueError):
    """Array shapes do not match the network or system"""

    exit_code = 2


class NumericalError(GreenToolkitError):
    """A computation produced an unusable result"""


class NonFiniteLossError(NumericalError):
    """A loss term or its gradient is not finite"""

    def __init__(self, message: str, point: Optional[Tuple[float, ...]] = None):
        super().__init__(message)
        self.point = point


class TrainingDivergedError(NumericalError):
    """Training produced a non-finite loss"""

    def __init__(self, epoch: int, message: str = ""):
        super().__init__(message or f"Training diverged at epoch {epoch}")
        self.epoch = epoch


class SolverBreakdownError(NumericalError):
    """A Krylov recurrence broke down"""


class SamplingError(NumericalError):
    """Rejection sampling exhausted its attempt budget"""


class FactorizationError(NumericalError):
    """A local or coarse factorization failed"""

    def __init__(self, message: str, block: Optional[int] = None):
        super().__init__(message)
        self.block = block


class NonFiniteKernelError(NumericalError):
    """A kernel evaluation is not finite"""

    def __init__(self, message: str, pair: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.pair = pair
