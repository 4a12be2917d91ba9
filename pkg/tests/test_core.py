"""Tests for settings, error handling, seeding and logging"""

import json
import logging

import pytest
from pydantic import ValidationError

from src.core.error_handler import EXIT_DATA, EXIT_OK, EXIT_USAGE, ErrorHandler, handle_errors
from src.core.exceptions import (
    BelowTransitionError, ConfigurationError, DataParseError, DegenerateFeatureError,
    FamilyDomainError, TrialError, UsageError
)
from src.core.logging import (
    StructuredFormatter, get_performance_metrics, log_performance, reset_performance_metrics
)
from src.core.rng import get_rng, resolve_seed, trial_seed
from src.core.settings import get_settings


class TestSettings:
    """Test environment-driven settings"""

    def test_defaults(self):
        """Test default values"""
        settings = get_settings()
        assert settings.default_epsilon == 0.1
        assert settings.drop_threshold == 1e-12
        assert settings.drop_degenerate is True
        assert settings.seed is None
        assert settings.trial_workers == 1

    def test_env_override(self, settings_env):
        """Test EPCA_ variables override fields"""
        settings = settings_env(default_epsilon=0.25, trial_workers=3, seed=9, log_level="debug")
        assert settings.default_epsilon == 0.25
        assert settings.trial_workers == 3
        assert settings.seed == 9
        assert settings.log_level == "DEBUG"
        assert get_settings() is settings

    def test_invalid_values(self, settings_env):
        """Test out-of-range values are rejected"""
        with pytest.raises(ValidationError):
            settings_env(default_epsilon=1.5)

    def test_invalid_environment(self, settings_env):
        """Test unknown environments are rejected"""
        with pytest.raises(ValidationError):
            settings_env(environment="moon")


class TestErrorHandler:
    """Test exit-code mapping"""

    @pytest.mark.parametrize("error, code", [
        (UsageError("bad flag"), EXIT_USAGE),
        (ConfigurationError("bad family"), EXIT_USAGE),
        (FileNotFoundError("missing.csv"), EXIT_DATA),
        (DataParseError("m.csv", "ragged row", line=3), EXIT_DATA),
        (FamilyDomainError("poisson", -1.0), EXIT_DATA),
        (BelowTransitionError("below"), EXIT_DATA),
        (TrialError(4, ValueError("boom")), EXIT_DATA),
        (RuntimeError("unknown"), EXIT_DATA),
    ])
    def test_exit_codes(self, error, code):
        """Test each error class maps to its exit code"""
        assert ErrorHandler().exit_code_for(error) == code

    def test_register_takes_precedence(self):
        """Test registered mappings win over defaults"""
        handler = ErrorHandler()
        handler.register(TrialError, 7)
        assert handler.exit_code_for(TrialError(0, ValueError("x"))) == 7

    def test_error_counts(self):
        """Test occurrences are counted per type"""
        handler = ErrorHandler()
        handler.handle_error(UsageError("a"))
        handler.handle_error(UsageError("b"))
        assert handler.get_error_stats() == {"UsageError": 2}
        handler.reset_stats()
        assert handler.get_error_stats() == {}

    def test_handle_errors_decorator(self, capsys):
        """Test the decorator returns exit codes and prints the failure"""
        @handle_errors("demo")
        def ok():
            return None

        @handle_errors("demo")
        def fails():
            raise ConfigurationError("bad family 'x'")

        assert ok() == EXIT_OK
        assert fails() == EXIT_USAGE
        assert "demo failed: bad family 'x'" in capsys.readouterr().out


class TestExceptionMessages:
    """Test exception context"""

    def test_parse_error_location(self):
        """Test line and byte-offset locations"""
        assert str(DataParseError("m.csv", "ragged row", line=3)) == "m.csv (line 3): ragged row"
        assert str(DataParseError("m.epm", "truncated", offset=20)) == "m.epm (byte offset 20): truncated"

    def test_degenerate_columns_listed(self):
        """Test the offending columns are named"""
        error = DegenerateFeatureError([3, 8])
        assert error.columns == [3, 8]
        assert "[3, 8]" in str(error)

    def test_trial_error(self):
        """Test trial index and cause are kept"""
        cause = ValueError("boom")
        error = TrialError(5, cause)
        assert error.trial_index == 5 and error.cause is cause
        assert str(error) == "Trial 5 failed: boom"


class TestRng:
    """Test seeded random streams"""

    def test_trial_seed(self):
        """Test trial t uses base + t"""
        assert trial_seed(100, 3) == 103

    def test_streams_are_reproducible(self):
        """Test equal seeds give equal streams"""
        assert get_rng(5).random() == get_rng(5).random()
        assert get_rng(5).random() != get_rng(6).random()

    def test_resolve_seed_precedence(self):
        """Test environment over command line over default"""
        assert resolve_seed(3, 42) == 42
        assert resolve_seed(3, None) == 3
        assert resolve_seed(None, None) == 0
        assert resolve_seed(None, None, default=11) == 11


class TestLogging:
    """Test structured logging and performance metrics"""

    def test_log_performance_records_calls(self):
        """Test successes and failures are counted"""
        reset_performance_metrics()

        @log_performance("unit_op")
        def op(fail=False):
            if fail:
                raise ValueError("no")
            return 1

        assert op() == 1
        with pytest.raises(ValueError):
            op(fail=True)
        stats = get_performance_metrics("unit_op")
        assert stats["total_calls"] == 2
        assert stats["successful_calls"] == 1
        assert stats["failed_calls"] == 1
        assert stats["success_rate"] == 0.5

    def test_structured_formatter(self):
        """Test JSON output with extra fields"""
        record = logging.LogRecord("src.test", logging.INFO, __file__, 10, "fitted %d spikes", (2,), None)
        record.rank = 2
        payload = json.loads(StructuredFormatter().format(record))
        assert payload["message"] == "fitted 2 spikes"
        assert payload["level"] == "INFO"
        assert payload["extra"]["rank"] == 2
