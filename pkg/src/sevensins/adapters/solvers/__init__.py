"""
Portfolio solver adapters.
"""

from .analytic_solver import AnalyticSolver
from .annealing_solver import AnnealingSolver
from .interior_point_solver import InteriorPointSolver

__all__ = ["AnalyticSolver", "AnnealingSolver", "InteriorPointSolver"]
