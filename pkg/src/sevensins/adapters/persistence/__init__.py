"""
File persistence for return series, covariance matrices and result tables.
"""

from .csv_io import read_covariance, read_returns, write_frame

__all__ = ["read_covariance", "read_returns", "write_frame"]
