"""pack: 圆填充半径 + 布局, 输出数据与 SVG。"""

from __future__ import annotations

from providers.storage.local_io import write_document
from services.atlas.app.commands._common import header, load_network, out_path, stem
from services.atlas.app.core.exceptions import EXIT_FAILURE, EXIT_OK, UsageError
from services.atlas.app.schemas.run_config import RunConfig
from workers.packing.circle_packing import (
    PackingMode,
    layout,
    pack_radii,
    packing_checks,
    packing_to_document,
    radius_ratio,
)
from workers.render.svg_render import render_packing_svg

_ALIASES = {"euclidean": PackingMode.EUCLIDEAN, "hyperbolic": PackingMode.HYPERBOLIC}


def parse_mode(mode: str | None) -> PackingMode:
    if mode is None:
        return PackingMode.HYPERBOLIC
    try:
        return _ALIASES.get(mode) or PackingMode(mode)
    except ValueError as exc:
        raise UsageError(f"unknown packing mode {mode!r}") from exc


def run(cfg: RunConfig) -> int:
    net = load_network(cfg.source)
    mode = parse_mode(cfg.mode)
    radii = pack_radii(net, mode, cfg.tol, superstep=bool(cfg.params.get("superstep")))
    packing = layout(net, radii)
    report = packing_checks(net, packing)

    h = header(cfg)
    name = stem(cfg.source)
    write_document(
        out_path(cfg, f"{name}.packing.json"),
        packing_to_document(packing).model_copy(update={"header": h}),
    )
    render_packing_svg(
        packing, out_path(cfg, f"{name}.packing.svg"), h, edges=bool(cfg.params.get("edges"))
    )

    ratio = radius_ratio(packing, radii.interior)
    if ratio is not None:
        print(f"interior/boundary radius ratio = {ratio:.7f}")
    print(
        f"mode={mode.value} sweeps={radii.sweeps} angle_residual={radii.residual:.3e} "
        f"tangency={report.tangency_residual:.3e} sum_r2={report.sum_of_squares:.6f} "
        f"passed={report.passed}"
    )
    return EXIT_OK if report.passed else EXIT_FAILURE
