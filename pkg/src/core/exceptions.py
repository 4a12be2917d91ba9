"""Custom exceptions for the ePCA toolkit"""

from typing import Optional, Sequence


class EPCAError(Exception):
    """Base exception for the ePCA toolkit"""
    pass


class ConfigurationError(EPCAError):
    """Exception raised for invalid configuration (family strings, generator settings)"""
    pass


class UsageError(EPCAError):
    """Exception raised for malformed command-line usage"""
    pass


class DataError(EPCAError):
    """Exception raised when input data violates a model precondition"""
    pass


class FamilyDomainError(DataError):
    """Exception raised when a mean lies outside a family's mean domain"""

    def __init__(self, family: str, value: float):
        self.family = family
        self.value = value
        super().__init__(f"Mean {value!r} is outside the mean domain of family '{family}'")


class DegenerateFeatureError(DataError):
    """Exception raised when columns carry no noise variance and dropping is disabled"""

    def __init__(self, columns: Sequence[int]):
        self.columns = list(columns)
        preview = ", ".join(str(c) for c in self.columns[:20])
        more = "" if len(self.columns) <= 20 else f", ... ({len(self.columns)} total)"
        super().__init__(f"Degenerate zero-variance columns: [{preview}{more}]")


class DataParseError(DataError):
    """Exception raised for malformed matrix or genotype files"""

    def __init__(self, path: str, message: str, line: Optional[int] = None, offset: Optional[int] = None):
        self.path = path
        self.line = line
        self.offset = offset
        location = ""
        if line is not None:
            location = f" (line {line})"
        elif offset is not None:
            location = f" (byte offset {offset})"
        super().__init__(f"{path}{location}: {message}")


class ShapeMismatchError(DataError):
    """Exception raised when matrix shapes do not agree"""
    pass


class NumericalError(EPCAError):
    """Base exception for numerical failures"""
    pass


class BelowTransitionError(NumericalError):
    """Exception raised when a spike inverse is requested at or below the bulk edge"""
    pass


class InternalConsistencyError(NumericalError):
    """Exception raised when pipeline stages disagree (e.g. non-positive kept eigenvalue)"""
    pass


class SingularSystemError(NumericalError):
    """Exception raised when the regularized covariance cannot be factored"""
    pass


class TrialError(EPCAError):
    """Exception raised when a Monte-Carlo trial fails"""

    def __init__(self, trial_index: int, cause: Exception):
        self.trial_index = trial_index
        self.cause = cause
        super().__init__(f"Trial {trial_index} failed: {cause}")
