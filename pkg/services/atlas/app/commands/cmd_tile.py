"""tile: 逃逸函数 + 矩形铺砌, 输出数据与 SVG。"""

from __future__ import annotations

from providers.storage.local_io import write_document
from services.atlas.app.commands._common import header, load_network, out_path, stem
from services.atlas.app.core.exceptions import EXIT_FAILURE, EXIT_OK
from services.atlas.app.schemas.run_config import RunConfig
from workers.potential.harmonic import profile_to_document, solve_escape
from workers.render.svg_render import render_tiling_svg
from workers.tiling.square_tiling import build_tiling, check_tiling, tiling_to_document


def run(cfg: RunConfig) -> int:
    net = load_network(cfg.source)
    profile = solve_escape(net, cfg.tol)
    tiling = build_tiling(net, profile, tol=cfg.tol)
    report = check_tiling(tiling, net)

    h = header(cfg)
    name = stem(cfg.source)
    write_document(
        out_path(cfg, f"{name}.profile.json"),
        profile_to_document(net, profile).model_copy(update={"header": h}),
    )
    write_document(
        out_path(cfg, f"{name}.tiling.json"),
        tiling_to_document(tiling).model_copy(update={"header": h}),
    )
    render_tiling_svg(tiling.eta, tiling.rects, out_path(cfg, f"{name}.tiling.svg"), h)

    print(f"eta = {tiling.eta!r}")
    print(
        f"rectangles={report.rectangles} degenerate={report.degenerate} "
        f"area_defect={report.area_defect:.3e} aspect_defect={report.max_aspect_defect:.3e} "
        f"interval_violations={len(report.interval_violations)} "
        f"disjoint_violations={len(report.disjoint_violations)} "
        f"passed={report.passed}"
    )
    return EXIT_OK if report.passed else EXIT_FAILURE
