# services/atlas/app/schemas/run_config.py
from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field


class RunConfig(BaseModel):
    """CLI 一次运行的全部参数；写入每个输出文件的 header。"""

    subcommand: str
    source: str | None = None  # input path or generator family string
    seed: int = Field(default=0, ge=0)
    tol: float | None = Field(default=None, gt=0)
    out: Path | None = None
    mode: str | None = None
    n: int | None = Field(default=None, ge=0)
    depths: list[int] | None = None
    params: dict[str, Any] = Field(default_factory=dict)

    def header_config(self) -> dict[str, Any]:
        data = self.model_dump(mode="json", exclude={"out"})
        return {k: v for k, v in data.items() if v not in (None, {}, [])}
