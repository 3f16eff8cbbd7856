# services/atlas/app/schemas/profile.py
from __future__ import annotations

from services.atlas.app.schemas.base import Document


class ProfileDocument(Document):
    y: list[float]
    flow: list[float]  # by dart id
    eta: float
    residual: float
    degenerate_edges: list[int]
