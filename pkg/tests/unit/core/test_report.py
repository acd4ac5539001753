"""Tests for the report model."""

import pytest

from sevensins.core.domain.report import SCHEMA_VERSION, Report, ReportTable


@pytest.fixture
def report() -> Report:
    report = Report(command="solve", exit_code=4, message="no solution")
    section = report.section("Problem", n=2, fully_invested=True)
    table = section.table("Positions", ["asset", "x"])
    table.add_row("A", 0.5)
    table.add_row("B", 0.5)
    return report


class TestReport:
    def test_to_dict(self, report):
        data = report.to_dict()
        assert data["schema"] == SCHEMA_VERSION == 1
        assert data["command"] == "solve"
        assert data["exit_code"] == 4
        assert data["sections"][0]["values"] == {"n": 2, "fully_invested": True}
        assert data["sections"][0]["tables"][0]["rows"] == [["A", 0.5], ["B", 0.5]]

    def test_from_dict_restores_everything(self, report):
        restored = Report.from_dict(report.to_dict())
        assert restored == report

    def test_from_dict_rejects_other_schema(self, report):
        data = report.to_dict()
        data["schema"] = 2
        with pytest.raises(ValueError, match="schema"):
            Report.from_dict(data)

    def test_sections_keep_insertion_order(self):
        report = Report(command="sins")
        for title in ("first", "second", "third"):
            report.section(title)
        assert [s.title for s in report.sections] == ["first", "second", "third"]


class TestReportTable:
    def test_row_length_must_match_columns(self):
        table = ReportTable("t", ["a", "b"])
        with pytest.raises(ValueError):
            table.add_row(1)
