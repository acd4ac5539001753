"""
Ports (interfaces) of the sevensins core.
"""

from .portfolio_solver import PortfolioSolver
from .report_formatter import ReportFormatter

__all__ = ["PortfolioSolver", "ReportFormatter"]
