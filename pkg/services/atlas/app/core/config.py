# services/atlas/app/core/config.py

import os
from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    统一管理项目的所有配置 (all runtime configuration).
    从环境变量 (前缀 BOUNDARY_ATLAS_) 或仓库根目录的 .env 文件读取。
    """

    # -------------------------------------------------------------------------
    # App 基础配置 (Basic App Settings)
    # -------------------------------------------------------------------------
    APP_NAME: str = "boundary-atlas"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # 并发上限 (BOUNDARY_ATLAS_THREADS)
    THREADS: int = Field(default_factory=lambda: os.cpu_count() or 1)

    # -------------------------------------------------------------------------
    # 线性求解 (Dirichlet solves)
    # -------------------------------------------------------------------------
    SOLVER_TOL: float = 1e-10
    SOLVER_METHOD: Literal["auto", "direct", "cg"] = "auto"
    SOLVER_MAXITER_FACTOR: int = 10
    # auto 模式下超过该未知数个数改用 CG
    SOLVER_DIRECT_LIMIT: int = 200_000

    # -------------------------------------------------------------------------
    # 圆填充 (Circle packing)
    # -------------------------------------------------------------------------
    # 角和残差; 比验收阈值 1e-8 更紧, 布局误差才能落在 LAYOUT_TOL 内
    PACKING_TOL: float = 1e-10
    PACKING_MAX_SWEEPS: int = 100_000
    LAYOUT_TOL: float = 1e-6

    # -------------------------------------------------------------------------
    # 生成器 / 随机游走 (Generators and walks)
    # -------------------------------------------------------------------------
    HYP7_RADIUS_CAP: int = 9
    WALK_STEP_CAP: int = 10_000_000
    WALK_BATCH: int = 256
    RESAMPLE_CAP: int = 100
    DEFAULT_SEED: int = 0

    # -------------------------------------------------------------------------
    # 输出 (Outputs)
    # -------------------------------------------------------------------------
    OUTPUT_DIR: str = "outputs"

    @field_validator("THREADS")
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        return max(1, v)

    model_config = SettingsConfigDict(
        env_prefix="BOUNDARY_ATLAS_",
        env_file=str(Path(__file__).parent.parent.parent.parent.parent / ".env"),
        env_file_encoding="utf-8",
        extra="ignore",
    )


# 全局唯一的 settings 实例
# from services.atlas.app.core.config import settings
settings = Settings()
