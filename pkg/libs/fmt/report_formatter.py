import math
from typing import Any, Optional

from rich.table import Table

from modules.experiments.models import ExperimentReport


class ReportFormatter:
    CHECK_ICONS = {
        True: "✅",
        False: "❌",
    }

    @staticmethod
    def fmt(value: Any) -> str:
        if value is None:
            return "—"
        if isinstance(value, bool):
            return ReportFormatter.CHECK_ICONS[value]
        if isinstance(value, float):
            if math.isnan(value):
                return "n/a"
            if math.isinf(value):
                return "∞" if value > 0 else "-∞"
            return f"{value:.4g}"
        if isinstance(value, dict):
            return ", ".join(f"{k}: {ReportFormatter.fmt(v)}" for k, v in value.items())
        return str(value)

    @staticmethod
    def rows_table(report: ExperimentReport, max_rows: Optional[int] = None) -> Table:
        table = Table(title=f"{report.experiment_id} ({len(report.rows)} rows)")
        for column in report.columns:
            table.add_column(column, justify="right")

        rows = report.rows if max_rows is None else report.rows[:max_rows]
        for row in rows:
            table.add_row(*(ReportFormatter.fmt(v) for v in row.values()))
        if max_rows is not None and len(report.rows) > max_rows:
            table.caption = f"… {len(report.rows) - max_rows} more rows in the report file"
        return table

    @staticmethod
    def summary_table(report: ExperimentReport) -> Table:
        table = Table(title=f"{report.experiment_id} summary", show_header=False)
        table.add_column("key", style="bold")
        table.add_column("value")
        for key, value in report.summary.items():
            table.add_row(key, ReportFormatter.fmt(value))
        return table
