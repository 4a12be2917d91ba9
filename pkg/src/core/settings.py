"""Application settings and configuration management"""

import os
from typing import Optional
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings
from dotenv import load_dotenv

# Load environment-specific .env file
environment = os.getenv('EPCA_ENVIRONMENT', 'development')
env_file = f'.env.{environment}'
if os.path.exists(env_file):
    load_dotenv(env_file)
else:
    load_dotenv()  # Fallback to .env


class Settings(BaseSettings):
    """
    ePCA toolkit configuration using Pydantic Settings.

    Every field can be overridden by an ``EPCA_``-prefixed environment variable.
    """

    # Runtime settings
    environment: str = Field(
        default="development",
        description="Runtime environment (development, staging, production)"
    )
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR)"
    )
    log_dir: Optional[str] = Field(
        default=None,
        description="Directory for rotating log files; console only when unset"
    )

    # Reproducibility
    seed: Optional[int] = Field(
        default=None,
        alias="EPCA_SEED",
        description="Base seed; overrides --seed on the command line when set"
    )

    # Pipeline settings
    drop_threshold: float = Field(
        default=1e-12,
        gt=0.0,
        description="Noise variances at or below this value mark a degenerate column"
    )
    drop_degenerate: bool = Field(
        default=True,
        description="Drop degenerate columns instead of failing"
    )
    clamp_means: bool = Field(
        default=False,
        description="Clamp sample means into the family mean domain before applying V"
    )
    alpha_floor: float = Field(
        default=1e-6,
        gt=0.0,
        le=1.0,
        description="Lower clip for the scaling coefficients"
    )
    eigen_tolerance: float = Field(
        default=1e-10,
        gt=0.0,
        description="Relative residual tolerance accepted from the symmetric eigensolver"
    )

    # Random matrix theory settings
    quad_tolerance: float = Field(
        default=1e-8,
        gt=0.0,
        description="Absolute tolerance for Marchenko-Pastur CDF quadrature"
    )

    # Denoising settings
    default_epsilon: float = Field(
        default=0.1,
        description="Ridge weight used by the EBLP denoiser"
    )
    denoise_block_rows: int = Field(
        default=2048,
        ge=1,
        description="Rows denoised per block against the shared factorization"
    )

    # Simulation settings
    trial_workers: int = Field(
        default=1,
        ge=1,
        description="Worker threads for Monte-Carlo trials (1 = sequential)"
    )

    @field_validator('log_level')
    def validate_log_level(cls, v):
        """Validate log level is one of the standard levels"""
        valid_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in valid_levels:
            raise ValueError(f'log_level must be one of {valid_levels}')
        return v.upper()

    @field_validator('environment')
    def validate_environment(cls, v):
        """Validate environment is recognized"""
        valid_envs = ['development', 'staging', 'production']
        if v not in valid_envs:
            raise ValueError(f'environment must be one of {valid_envs}')
        return v

    @field_validator('default_epsilon')
    def validate_epsilon(cls, v):
        """Ridge weight must lie in [0, 1)"""
        if not 0.0 <= v < 1.0:
            raise ValueError('default_epsilon must lie in [0, 1)')
        return v

    @property
    def is_production(self) -> bool:
        """Check if running in production mode"""
        return self.environment == 'production'

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "env_prefix": "EPCA_",
        "extra": "ignore",
        "populate_by_name": True
    }


# Global settings instance
_settings = None


def get_settings() -> Settings:
    """
    Get application settings instance.

    Returns:
        Settings: Application configuration settings
    """
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings

def reload_settings() -> Settings:
    """
    Force reload of settings from environment variables.

    Returns:
        Settings: Fresh application configuration settings
    """
    global _settings
    _settings = None
    return get_settings()
