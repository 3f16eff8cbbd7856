from __future__ import annotations

from pydantic import BaseModel

from services.atlas.app.schemas.base import Document


class TraceRecord(BaseModel):
    index: int
    path: list[int]
    exit_vertex: int
    exit_theta: float | None = None


class WalkDocument(Document):
    network: str
    start: int
    absorb_at_root: bool
    traces: list[TraceRecord]
