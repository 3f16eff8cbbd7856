# services/atlas/app/schemas/base.py
from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class Header(BaseModel):
    """Reproducibility header written at the top of every output file."""

    tool: str
    version: str
    config: dict[str, Any] = Field(default_factory=dict)
    seed: int | None = None


class Document(BaseModel):
    model_config = ConfigDict(extra="forbid")

    header: Header | None = None
