from typing import Any

from pydantic import Field, field_validator

from modules.base.models import BaseDomainModel


class ExperimentReport(BaseDomainModel):
    """
    One experiment run: the parameters that reproduce it, one row per case
    in input order and a summary of orderings and acceptance checks.
    """

    experiment_id: str = Field(min_length=1)
    parameters: dict[str, Any] = {}
    rows: list[dict[str, Any]] = []
    summary: dict[str, Any] = {}

    @field_validator("rows")
    @classmethod
    def _rows_share_columns(cls, rows: list[dict[str, Any]]) -> list[dict[str, Any]]:
        if rows:
            columns = list(rows[0])
            for row in rows[1:]:
                if list(row) != columns:
                    raise ValueError(f"Row columns {list(row)} differ from {columns}")
        return rows

    @property
    def columns(self) -> list[str]:
        return list(self.rows[0]) if self.rows else []

    def column(self, name: str) -> list[Any]:
        return [row[name] for row in self.rows]
