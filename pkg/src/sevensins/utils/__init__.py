"""
Utility functions for the sevensins package.
"""

from .logging_utils import LOG_ENV_VAR, resolve_level, setup_logging  # noqa: F401
