"""render: 从已保存的铺砌或填充数据重新生成 SVG。"""

from __future__ import annotations

from pathlib import Path

import orjson

from providers.storage.local_io import parse_document, read_text
from services.atlas.app.commands._common import out_path
from services.atlas.app.core.exceptions import EXIT_OK, ParseError, UsageError
from services.atlas.app.schemas.packing import PackingDocument
from services.atlas.app.schemas.run_config import RunConfig
from services.atlas.app.schemas.tiling import TilingDocument
from workers.packing.circle_packing import packing_from_document
from workers.render.svg_render import render_packing_svg, render_tiling_svg


def run(cfg: RunConfig) -> int:
    if not cfg.source:
        raise UsageError("render needs a tiling or packing data file")
    text = read_text(cfg.source)
    try:
        keys = orjson.loads(text).keys()
    except (orjson.JSONDecodeError, AttributeError) as exc:
        raise ParseError(f"{cfg.source}: not a JSON object") from exc

    name = Path(cfg.source).name.removesuffix(".json")
    if "rectangles" in keys:
        doc = parse_document(text, TilingDocument, source=cfg.source)
        path = render_tiling_svg(doc.eta, doc.rectangles, out_path(cfg, f"{name}.svg"), doc.header)
    elif "circles" in keys:
        doc = parse_document(text, PackingDocument, source=cfg.source)
        path = render_packing_svg(
            packing_from_document(doc), out_path(cfg, f"{name}.svg"), doc.header
        )
    else:
        raise UsageError(f"{cfg.source}: neither tiling nor packing data")
    print(f"rendered -> {path}")
    return EXIT_OK
