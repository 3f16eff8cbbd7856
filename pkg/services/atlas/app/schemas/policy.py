# services/atlas/app/schemas/policy.py
"""rules/acceptance.yaml 与 orchestrator/experiments/*.yaml 的模型。"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class AcceptancePolicy(BaseModel):
    model_config = ConfigDict(extra="forbid")

    oracle_tol: float = 1e-9
    tiling_tol: float = 1e-8
    exit_measure_max_deviation: float = 0.02
    exact_measure_tol: float = 1e-8
    packing_angle_residual: float = 1e-8
    packing_tangency_residual: float = 1e-6
    martin_harmonicity: float = 1e-7
    qk_ks_max: float = 0.10
    poisson2_slack: float = 1e-8


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Literal[
        "exit_measure", "qk", "martin", "compare", "rough_energy", "poisson2", "tiling", "packing"
    ]
    description: str = ""
    params: dict[str, Any] = Field(default_factory=dict)
    tolerances: list[str] = Field(default_factory=list)  # keys of AcceptancePolicy

    @field_validator("tolerances")
    @classmethod
    def _known_keys(cls, v: list[str]) -> list[str]:
        unknown = sorted(set(v) - set(AcceptancePolicy.model_fields))
        if unknown:
            raise ValueError(f"unknown acceptance keys: {unknown}")
        return v
