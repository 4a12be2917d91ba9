"""Error classification and exit-code mapping for the command line"""

import logging
import traceback
from typing import Optional, Callable, Any, Dict, List, Tuple, Type
from functools import wraps

from .exceptions import (
    EPCAError, ConfigurationError, UsageError, DataError, NumericalError, TrialError
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ErrorHandler:
    """
    Centralized error handling for command execution.

    Maps exceptions to process exit codes and keeps per-type occurrence counts.
    """

    def __init__(self):
        # Checked in order, first match wins
        self.exit_codes: List[Tuple[Type[BaseException], int]] = [
            (UsageError, EXIT_USAGE),
            (ConfigurationError, EXIT_USAGE),
            (FileNotFoundError, EXIT_DATA),
            (DataError, EXIT_DATA),
            (NumericalError, EXIT_DATA),
            (TrialError, EXIT_DATA),
            (EPCAError, EXIT_DATA),
            (OSError, EXIT_DATA),
        ]
        self.error_counts: Dict[str, int] = {}

    def register(self, error_type: Type[BaseException], exit_code: int):
        """Register an exit code for an exception type, taking precedence over defaults"""
        self.exit_codes.insert(0, (error_type, exit_code))

    def exit_code_for(self, error: BaseException) -> int:
        """Exit code for an exception; unknown errors count as data errors"""
        for error_type, code in self.exit_codes:
            if isinstance(error, error_type):
                return code
        return EXIT_DATA

    def handle_error(
        self,
        error: BaseException,
        context: Optional[Dict[str, Any]] = None
    ) -> int:
        """
        Record an error and return the exit code the command should end with.

        Args:
            error: The exception that occurred
            context: Additional context for the log record

        Returns:
            Process exit code
        """
        error_type = type(error).__name__
        self.error_counts[error_type] = self.error_counts.get(error_type, 0) + 1
        code = self.exit_code_for(error)

        logger.error(
            f"{error_type} ({self.error_counts[error_type]} occurrences): {error}",
            extra={'exit_code': code, **(context or {})}
        )
        logger.debug(f"Traceback: {traceback.format_exc()}")
        return code

    def get_error_stats(self) -> Dict[str, int]:
        """Get error occurrence statistics"""
        return self.error_counts.copy()

    def reset_stats(self):
        """Reset error statistics"""
        self.error_counts.clear()


# Global error handler instance
error_handler = ErrorHandler()


def handle_errors(operation: str):
    """
    Decorator turning a command function into one that returns an exit code.

    Args:
        operation: Name of the operation for log context
    """
    def decorator(func: Callable[..., Optional[int]]) -> Callable[..., int]:
        @wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                result = func(*args, **kwargs)
                return EXIT_OK if result is None else result
            except Exception as e:
                code = error_handler.handle_error(e, {'operation': operation})
                print(f"❌ {operation} failed: {e}")
                return code
        return wrapper
    return decorator
