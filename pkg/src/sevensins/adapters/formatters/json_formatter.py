"""
JSON report formatter.
"""

import json
import logging
import math
from typing import Any

import numpy as np

from ...core.domain.report import Report
from ...core.ports.report_formatter import ReportFormatter

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays to plain Python; NaN and inf become None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class JsonFormatter(ReportFormatter):
    """
    Renders a report as indented JSON with a top-level ``"schema"`` key.

    The rendering parses back into an equal Report via ``Report.from_dict``.
    """

    def __init__(self, indent: int = 2):
        self.indent = indent

    def format_report(self, report: Report) -> str:
        payload = to_jsonable(report.to_dict())
        logger.debug("Serializing report %r to JSON", report.command)
        return json.dumps(payload, indent=self.indent, allow_nan=False) + "\n"
