"""
Application layer wiring the core to its adapters.
"""

from .factory import ApplicationFactory

__all__ = ["ApplicationFactory"]
