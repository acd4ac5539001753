"""
Console table formatter built on rich.
"""

import math
from typing import Any

import numpy as np
from rich.console import Console
from rich.table import Table

from ...core.domain.report import Report, ReportSection
from ...core.ports.report_formatter import ReportFormatter

NOT_AVAILABLE = "n/a"


def format_value(value: Any) -> str:
    """Human-readable cell text; floats get six significant digits."""
    if value is None:
        return NOT_AVAILABLE
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(float(value)):
            return NOT_AVAILABLE
        return f"{float(value):.6g}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    return str(value)


class TableFormatter(ReportFormatter):
    """
    Renders a report as plain-text rich tables.

    Each section becomes a key/value table followed by its own tables.
    Colour is off so the output is stable in files and pipes.
    """

    def __init__(self, width: int = 120):
        self.width = width

    def format_report(self, report: Report) -> str:
        console = Console(
            width=self.width, color_system=None, force_terminal=False, highlight=False
        )
        with console.capture() as capture:
            console.print(f"sevensins {report.command}", style="bold")
            if report.message:
                console.print(report.message)
            for section in report.sections:
                self._print_section(console, section)
        return capture.get()

    def _print_section(self, console: Console, section: ReportSection) -> None:
        console.print()
        console.print(section.title, style="bold")
        if section.values:
            summary = Table(show_header=True, header_style="bold")
            summary.add_column("quantity")
            summary.add_column("value", justify="right", overflow="fold")
            for key, value in section.values.items():
                summary.add_row(key, format_value(value))
            console.print(summary)
        for table in section.tables:
            rendered = Table(title=table.title, show_header=True, header_style="bold")
            for column in table.columns:
                rendered.add_column(column, justify="right")
            for row in table.rows:
                rendered.add_row(*(format_value(v) for v in row))
            console.print(rendered)
