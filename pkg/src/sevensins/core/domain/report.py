"""
Format-neutral report model rendered by the report formatters.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

SCHEMA_VERSION = 1


@dataclass
class ReportTable:
    """A titled table; every row has one value per column."""

    title: str
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} values for {len(self.columns)} columns"
            )
        self.rows.append(list(values))

    def to_dict(self) -> Dict[str, Any]:
        return {"title": self.title, "columns": list(self.columns), "rows": self.rows}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ReportTable":
        rows = [list(row) for row in data["rows"]]
        return cls(data["title"], list(data["columns"]), rows)


@dataclass
class ReportSection:
    """Named values plus tables under one heading."""

    title: str
    values: Dict[str, Any] = field(default_factory=dict)
    tables: List[ReportTable] = field(default_factory=list)

    def table(self, title: str, columns: Sequence[str]) -> ReportTable:
        created = ReportTable(title, list(columns))
        self.tables.append(created)
        return created

    def to_dict(self) -> Dict[str, Any]:
        return {
            "title": self.title,
            "values": dict(self.values),
            "tables": [t.to_dict() for t in self.tables],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ReportSection":
        return cls(
            data["title"],
            dict(data.get("values", {})),
            [ReportTable.from_dict(t) for t in data.get("tables", [])],
        )


@dataclass
class Report:
    """
    Output of one CLI command.

    Attributes:
        command: Command that produced the report
        sections: Report body
        exit_code: Process exit code the command ends with
    """

    command: str
    sections: List[ReportSection] = field(default_factory=list)
    exit_code: int = 0
    message: Optional[str] = None

    def section(self, title: str, **values: Any) -> ReportSection:
        created = ReportSection(title, dict(values))
        self.sections.append(created)
        return created

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "exit_code": self.exit_code,
            "message": self.message,
            "sections": [s.to_dict() for s in self.sections],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Report":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(
            command=data["command"],
            sections=[ReportSection.from_dict(s) for s in data.get("sections", [])],
            exit_code=int(data.get("exit_code", 0)),
            message=data.get("message"),
        )
