"""
Exception hierarchy for the mean-field control toolkit
"""

from typing import Any, Optional


class MFCError(Exception):
    """Base class for all toolkit errors"""


class ArgumentError(MFCError, ValueError):
    """Out-of-range index, bad dimension or illegal parameter"""


class DistributionError(ArgumentError):
    """A vector that should lie on the probability simplex does not"""


class CapabilityError(MFCError):
    """The environment does not support the requested operation"""


class CapacityError(MFCError):
    """An enumeration would exceed its configured cap"""

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class NumericError(MFCError, ArithmeticError):
    """NaN or infinite values where finite ones are required"""


class BoundValidityError(MFCError, ValueError):
    """A closed-form bound was evaluated outside its validity region"""


class DegenerateBoundError(BoundValidityError):
    """The bound expression is singular at the given constants"""


class ConfigError(MFCError):
    """Semantically invalid experiment configuration"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ArtifactError(MFCError):
    """A persisted artifact is missing or unreadable"""


class TrainingAborted(MFCError):
    """Training stopped early; the partial trace is preserved"""

    def __init__(self, message: str, trace: Any):
        super().__init__(message)
        self.trace = trace
