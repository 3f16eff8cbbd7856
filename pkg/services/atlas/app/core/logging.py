# services/atlas/app/core/logging.py
"""loguru 初始化：stderr 输出，可选 JSON 序列化。"""

from __future__ import annotations

import sys

from loguru import logger

from services.atlas.app.core.config import settings

_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level> {extra}"
)


def setup_logging(level: str | None = None, json: bool | None = None) -> None:
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format=_FORMAT,
        serialize=settings.LOG_JSON if json is None else json,
        backtrace=False,
        diagnose=False,
    )
