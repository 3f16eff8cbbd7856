# services/atlas/app/schemas/packing.py
from __future__ import annotations

from pydantic import BaseModel

from services.atlas.app.schemas.base import Document


class CircleRecord(BaseModel):
    vertex: int
    center_x: float
    center_y: float
    radius: float


class PackingDocument(Document):
    mode: str
    boundary: list[int]
    circles: list[CircleRecord]
    angle_residual: float
    tangency_residual: float


class PackingReport(BaseModel):
    tangency_residual: float
    overlap_violation: float
    containment_violation: float
    sum_of_squares: float
    coordinate_energy: float
    coordinate_energy_bound: float
    passed: bool
