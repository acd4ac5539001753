"""
Report formatters.
"""

from .json_formatter import JsonFormatter
from .table_formatter import TableFormatter

__all__ = ["JsonFormatter", "TableFormatter"]
