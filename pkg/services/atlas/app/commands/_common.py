"""命令共享工具: 网络来源解析, 输出路径, header。"""

from __future__ import annotations

import re
from pathlib import Path

from providers.storage.local_io import make_header, read_document
from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import UsageError
from services.atlas.app.schemas.base import Header
from services.atlas.app.schemas.graph import GraphDocument
from services.atlas.app.schemas.run_config import RunConfig
from workers.network.generators import generate
from workers.network.planar_network import PlanarNetwork, build_network


def load_network(source: str | None) -> PlanarNetwork:
    """A graph file path, or a family string such as 'hyp7(4)'."""
    if not source:
        raise UsageError("a graph file or network family is required")
    path = Path(source)
    if path.is_file():
        return build_network(read_document(path, GraphDocument))
    try:
        return generate(source)
    except UsageError as exc:
        raise UsageError(f"{source!r} is neither a graph file nor a network family") from exc


def stem(source: str | None) -> str:
    path = Path(source or "network")
    if path.is_file():
        name = path.name
        return name.split(".")[0] or "network"
    return re.sub(r"[^A-Za-z0-9]+", "_", str(source)).strip("_") or "network"


def out_path(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out or settings.OUTPUT_DIR) / name


def header(cfg: RunConfig) -> Header:
    return make_header(cfg.header_config(), cfg.seed)
