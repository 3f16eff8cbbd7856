# services/atlas/app/schemas/report.py
from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field

from services.atlas.app.schemas.base import Document


class CheckResult(BaseModel):
    name: str
    statistic: float | None = None
    tolerance: float | None = None
    passed: bool
    details: dict[str, Any] = Field(default_factory=dict)


class ExperimentReport(Document):
    experiment: str
    seed: int | None = None
    params: dict[str, Any] = Field(default_factory=dict)
    checks: list[CheckResult] = Field(default_factory=list)
    data: dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)
