# services/atlas/app/schemas/graph.py
from __future__ import annotations

from typing import Literal

from pydantic import Field, model_validator

from services.atlas.app.schemas.base import Document


class GraphDocument(Document):
    """Text graph format: rotation system + conductances + root + absorbing set."""

    name: str = "network"
    vertices: int = Field(ge=1)
    darts: list[tuple[int, int]]
    rotations: list[list[int]]
    conductances: list[float]
    root: int = Field(ge=0)
    absorbing: list[int]
    outer_dart: int | None = None
    flags: list[Literal["triangulation", "clockwise"]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _lengths(self) -> "GraphDocument":
        if len(self.conductances) != len(self.darts):
            raise ValueError("conductances must list one value per dart pair (edge)")
        if len(self.rotations) != self.vertices:
            raise ValueError("rotations must list one cyclic dart sequence per vertex")
        return self
