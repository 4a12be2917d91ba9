"""Structured logging and per-stage performance metrics"""

import json
import logging
import logging.handlers
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import psutil

from .settings import get_settings

PACKAGE_LOGGER = 'src'
METRICS_LOGGER = 'metrics'

_RESERVED_RECORD_KEYS = frozenset(
    logging.LogRecord('', 0, '', 0, '', (), None).__dict__
) | {'message', 'asctime', 'taskName'}

# (file name, level, max bytes, backups, logger)
_FILE_HANDLERS: List[Tuple[str, int, int, int, str]] = [
    ("epca.log", logging.INFO, 50 * 2 ** 20, 5, PACKAGE_LOGGER),
    ("errors.log", logging.ERROR, 10 * 2 ** 20, 3, PACKAGE_LOGGER),
    ("metrics.log", logging.INFO, 20 * 2 ** 20, 3, METRICS_LOGGER),
]


class StructuredFormatter(logging.Formatter):
    """
    JSON formatter for log records.

    Anything passed through ``extra=`` (problem sizes, ranks, seeds, durations)
    is collected under the ``extra`` key.
    """

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            'timestamp': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
            'thread_name': record.threadName,
        }
        if record.exc_info:
            payload['exception'] = {
                'type': record.exc_info[0].__name__,
                'message': str(record.exc_info[1]),
                'traceback': self.formatException(record.exc_info),
            }
        extra = {k: v for k, v in record.__dict__.items() if k not in _RESERVED_RECORD_KEYS}
        if extra:
            payload['extra'] = extra
        return json.dumps(payload, default=str, ensure_ascii=False)


@dataclass
class OperationStats:
    """Call counts, durations and resident memory of one pipeline stage"""
    total_calls: int = 0
    successful_calls: int = 0
    failed_calls: int = 0
    total_duration: float = 0.0
    min_duration: float = float('inf')
    max_duration: float = 0.0
    peak_rss_mb: float = 0.0
    last_call: Optional[str] = None

    def add(self, duration: float, success: bool, rss_mb: float):
        self.total_calls += 1
        if success:
            self.successful_calls += 1
        else:
            self.failed_calls += 1
        self.total_duration += duration
        self.min_duration = min(self.min_duration, duration)
        self.max_duration = max(self.max_duration, duration)
        self.peak_rss_mb = max(self.peak_rss_mb, rss_mb)
        self.last_call = datetime.now().isoformat()

    def summary(self) -> Dict[str, Any]:
        data = asdict(self)
        data['avg_duration'] = self.total_duration / self.total_calls
        data['success_rate'] = self.successful_calls / self.total_calls
        return data


class PerformanceMetrics:
    """Thread-safe registry of ``OperationStats`` keyed by operation name"""

    def __init__(self):
        self._stats: Dict[str, OperationStats] = {}
        self._lock = threading.Lock()

    def record_operation(self, operation: str, duration: float, success: bool = True, rss_mb: float = 0.0):
        with self._lock:
            self._stats.setdefault(operation, OperationStats()).add(duration, success, rss_mb)

    def get_metrics(self, operation: Optional[str] = None) -> Dict[str, Any]:
        """Summary of one operation ({} if never called), or of all of them"""
        with self._lock:
            if operation:
                stats = self._stats.get(operation)
                return stats.summary() if stats else {}
            return {op: stats.summary() for op, stats in self._stats.items()}

    def reset(self, operation: Optional[str] = None):
        with self._lock:
            if operation:
                self._stats.pop(operation, None)
            else:
                self._stats.clear()


performance_metrics = PerformanceMetrics()


class LoggingManager:
    """
    One-time configuration of the package and metrics loggers.

    Console output is human-readable in development and JSON in production;
    rotating JSON files are written only when ``log_dir`` is configured.
    """

    def __init__(self):
        self.configured = False

    @staticmethod
    def _reset(logger: logging.Logger):
        for handler in logger.handlers[:]:
            logger.removeHandler(handler)

    def setup_logging(self, force: bool = False):
        if self.configured and not force:
            return

        settings = get_settings()
        level = getattr(logging, settings.log_level)

        package_logger = logging.getLogger(PACKAGE_LOGGER)
        package_logger.setLevel(level)
        self._reset(package_logger)

        console = logging.StreamHandler()
        console.setLevel(level)
        console.setFormatter(
            StructuredFormatter() if settings.is_production
            else logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        )
        package_logger.addHandler(console)

        metrics_logger = logging.getLogger(METRICS_LOGGER)
        metrics_logger.setLevel(logging.INFO)
        metrics_logger.propagate = False
        self._reset(metrics_logger)

        if settings.log_dir:
            log_dir = Path(settings.log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)
            for filename, file_level, max_bytes, backups, target in _FILE_HANDLERS:
                handler = logging.handlers.RotatingFileHandler(
                    log_dir / filename, maxBytes=max_bytes, backupCount=backups
                )
                handler.setLevel(file_level)
                handler.setFormatter(StructuredFormatter())
                logging.getLogger(target).addHandler(handler)
        else:
            metrics_logger.addHandler(logging.NullHandler())

        self.configured = True
        logging.getLogger(__name__).debug(
            "Logging system initialized",
            extra={'environment': settings.environment, 'log_level': settings.log_level}
        )


logging_manager = LoggingManager()


def get_logger(name: str) -> logging.Logger:
    """Logger for a module, configuring logging on first use"""
    logging_manager.setup_logging()
    return logging.getLogger(name)


def setup_logging(force: bool = False):
    """Initialize the logging system"""
    logging_manager.setup_logging(force=force)


def log_performance(operation: str):
    """
    Decorator timing a pipeline stage and recording it in the performance metrics.

    Args:
        operation: Name of the operation for metrics
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            logger = get_logger(func.__module__)
            start = time.perf_counter()
            success = True
            try:
                return func(*args, **kwargs)
            except Exception as e:
                success = False
                logger.debug(f"{operation} failed: {e}", extra={'operation': operation, 'error_type': type(e).__name__})
                raise
            finally:
                duration = time.perf_counter() - start
                rss_mb = psutil.Process().memory_info().rss / 2 ** 20
                performance_metrics.record_operation(operation, duration, success, rss_mb)
                logging.getLogger(METRICS_LOGGER).info(
                    f"Performance: {operation}",
                    extra={'operation': operation, 'duration': duration, 'success': success, 'rss_mb': rss_mb}
                )
        return wrapper
    return decorator


def get_performance_metrics(operation: Optional[str] = None) -> Dict[str, Any]:
    """Get performance metrics"""
    return performance_metrics.get_metrics(operation)


def reset_performance_metrics(operation: Optional[str] = None):
    """Reset performance metrics"""
    performance_metrics.reset(operation)
