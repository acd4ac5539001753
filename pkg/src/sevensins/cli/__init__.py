"""
sevensins CLI module.
"""

from .cli import main  # noqa: F401

__all__ = ["main"]
