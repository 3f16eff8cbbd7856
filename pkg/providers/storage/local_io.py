# -*- coding: utf-8 -*-
"""
本地文件写入/读取 (local artifact storage)
- 所有数据文件为 JSON 对象，首个键为 header（tool / version / config / seed）
- 不写时间戳，同一配置重复运行得到逐字节相同的输出
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, TypeVar

import orjson
from loguru import logger
from pydantic import BaseModel, ValidationError

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import ParseError
from services.atlas.app.schemas.base import Header

M = TypeVar("M", bound=BaseModel)

_SETTINGS_IN_HEADER = (
    "SOLVER_TOL",
    "SOLVER_METHOD",
    "PACKING_TOL",
    "LAYOUT_TOL",
    "WALK_STEP_CAP",
    "RESAMPLE_CAP",
)


def make_header(config: dict[str, Any] | None = None, seed: int | None = None) -> Header:
    full = {k.lower(): getattr(settings, k) for k in _SETTINGS_IN_HEADER}
    full.update(config or {})
    return Header(tool=settings.APP_NAME, version=settings.APP_VERSION, config=full, seed=seed)


def write_text(path: str | Path, text: str) -> Path:
    p = Path(path)
    if p.exists():
        logger.warning("overwriting existing output", path=str(p))
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
    return p


def read_text(path: str | Path) -> str:
    p = Path(path)
    if not p.exists():
        raise ParseError(f"no such file: {p}")
    return p.read_text(encoding="utf-8")


def dumps(doc: BaseModel | dict[str, Any]) -> bytes:
    data = doc.model_dump(mode="json") if isinstance(doc, BaseModel) else dict(doc)
    # header first, remaining top-level keys sorted
    ordered: dict[str, Any] = {}
    if "header" in data:
        ordered["header"] = data.pop("header")
    ordered.update((k, data[k]) for k in sorted(data))
    return orjson.dumps(ordered, option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY) + b"\n"


def write_document(path: str | Path, doc: BaseModel) -> Path:
    return write_text(path, dumps(doc).decode("utf-8"))


def parse_document(text: str, model: type[M], *, source: str = "<string>") -> M:
    try:
        raw = orjson.loads(text)
    except orjson.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg}", line=exc.lineno) from exc
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(x) for x in first["loc"])
        raise ParseError(f"{source}: {loc}: {first['msg']}", line=_line_of(text, first["loc"]))


def read_document(path: str | Path, model: type[M]) -> M:
    return parse_document(read_text(path), model, source=str(path))


def _line_of(text: str, loc: tuple) -> int | None:
    """Best-effort line number of the top-level key named in a validation error."""
    if not loc or not isinstance(loc[0], str):
        return None
    needle = f'"{loc[0]}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None
