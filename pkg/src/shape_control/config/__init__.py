"""Configuration management module for Shape Control."""

import logging
import os
from pathlib import Path
from typing import Optional

# Try to load .env file if python-dotenv is available
try:
    from dotenv import load_dotenv

    # Load .env file from project root
    env_path = Path(__file__).parent.parent.parent.parent / ".env"
    if env_path.exists():
        load_dotenv(env_path)
except ImportError:
    # python-dotenv not installed, skip loading .env file
    pass

from shape_control.constants import DEFAULT_MAX_WORKERS
from shape_control.discretization.base import ConfigurationError

__all__ = ["Config", "ConfigurationError"]

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Config:
    """
    Environment-driven settings.

    Values are read when requested so that tests and the CLI see the current
    environment rather than the one present at import time.
    """

    LOG_LEVEL_VAR = "SHAPE_CONTROL_LOG_LEVEL"
    MAX_WORKERS_VAR = "SHAPE_CONTROL_MAX_WORKERS"
    DEFAULT_SEED_VAR = "SHAPE_CONTROL_DEFAULT_SEED"

    @classmethod
    def get_log_level(cls) -> int:
        """
        Get the default logging level.

        Returns:
            logging level constant (INFO when unset)

        Raises:
            ConfigurationError: If the variable names an unknown level
        """
        name = os.getenv(cls.LOG_LEVEL_VAR, "INFO").strip().upper()
        if name not in _LOG_LEVELS:
            raise ConfigurationError(
                f"{cls.LOG_LEVEL_VAR}={name!r} is not one of {', '.join(_LOG_LEVELS)}"
            )
        return getattr(logging, name)

    @classmethod
    def get_max_workers(cls) -> int:
        """
        Get the number of threads used to assemble control-map columns.

        Returns:
            Positive worker count

        Raises:
            ConfigurationError: If the variable is not a positive integer
        """
        raw = os.getenv(cls.MAX_WORKERS_VAR)
        if raw is None or raw.strip() == "":
            return DEFAULT_MAX_WORKERS
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigurationError(f"{cls.MAX_WORKERS_VAR} must be an integer, got {raw!r}") from e
        if value < 1:
            raise ConfigurationError(f"{cls.MAX_WORKERS_VAR} must be positive, got {value}")
        return value

    @classmethod
    def get_default_seed(cls) -> Optional[int]:
        """
        Get the seed used when neither the run-config nor --seed provide one.

        Returns:
            Seed or None if not set
        """
        raw = os.getenv(cls.DEFAULT_SEED_VAR)
        if raw is None or raw.strip() == "":
            return None
        try:
            return int(raw)
        except ValueError as e:
            raise ConfigurationError(f"{cls.DEFAULT_SEED_VAR} must be an integer, got {raw!r}") from e
