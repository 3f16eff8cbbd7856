# services/atlas/app/schemas/tiling.py
from __future__ import annotations

from pydantic import BaseModel

from services.atlas.app.schemas.base import Document


class RectangleRecord(BaseModel):
    dart: int
    theta_start: float
    width: float
    y_lo: float
    y_hi: float


class VertexIntervalRecord(BaseModel):
    vertex: int
    theta_start: float
    length: float
    theta: float


class TilingDocument(Document):
    eta: float
    rectangles: list[RectangleRecord]
    vertex_intervals: list[VertexIntervalRecord]


class TilingReport(BaseModel):
    """check_tiling 的结果；violations 列表为空即通过。"""

    rectangles: int
    degenerate: int
    disjoint_violations: list[tuple[int, int]]
    area: float
    area_defect: float
    max_aspect_defect: float
    interval_violations: list[int]
    face_adjacency_violations: list[tuple[int, int]]
    boundary_sum_defect: float
    bound_ratio_m2: float | None = None
    bound_ratio_printed: float | None = None
    passed: bool
