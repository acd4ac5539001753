"""
Interface for report formatters.
"""

from abc import ABC, abstractmethod
from pathlib import Path

from ..domain.report import Report


class ReportFormatter(ABC):
    """
    Interface for a report formatter.

    A formatter renders a Report into one output format (a console table or
    JSON) and can write the rendering to a file.
    """

    @abstractmethod
    def format_report(self, report: Report) -> str:
        """
        Render a report.

        Args:
            report: Report to render

        Returns:
            Rendered report as text
        """
        pass

    def write_report(self, content: str, output_path: Path) -> Path:
        """
        Write rendered content to a file, creating parent directories.

        Args:
            content: Rendered report
            output_path: Destination file

        Returns:
            Path of the written file
        """
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(content, encoding="utf-8")
        return output_path
