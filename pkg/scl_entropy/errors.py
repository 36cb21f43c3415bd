"""
Exception types for the scl-entropy package
"""

from typing import Any, List, Optional


class SclEntropyError(Exception):
    """Base class for every error raised by scl_entropy."""


class DomainError(SclEntropyError, ValueError):
    """Argument outside the domain of an operation (e.g. s <= 0, |u| > M)."""


class KindError(SclEntropyError, ValueError):
    """Operation is not defined for this flux kind."""


class RangeError(SclEntropyError, ValueError):
    """Value outside the range of an inverse map."""


class SupportError(SclEntropyError, ValueError):
    """Function support exceeds the projection window."""


class ParamError(SclEntropyError, ValueError):
    """eps / N / h preconditions of a construction are violated."""


class DegenerateError(SclEntropyError, ValueError):
    """Flux curvature vanishes where a strictly positive value is needed."""


class ConfigError(SclEntropyError, ValueError):
    """Invalid flux specification or experiment configuration."""


class ClassError(SclEntropyError, ValueError):
    """Function is not a member of the requested one-sided derivative class."""

    def __init__(self, message: str, reasons: Optional[List[str]] = None):
        super().__init__(message)
        self.reasons = reasons or []


class StallError(SclEntropyError, RuntimeError):
    """Front tracking exceeded its interaction budget."""


class CoverageFailure(SclEntropyError, RuntimeError):
    """Some samples are farther than eps from every assigned cover element."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report

    @property
    def uncovered(self) -> List[int]:
        if self.report is None:
            return []
        return list(getattr(self.report, "uncovered", []))
