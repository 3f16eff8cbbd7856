"""walk: 从给定顶点出发的若干条带种子游走。"""

from __future__ import annotations

from providers.storage.local_io import write_document
from services.atlas.app.commands._common import header, load_network, out_path, stem
from services.atlas.app.core.exceptions import EXIT_OK
from services.atlas.app.schemas.run_config import RunConfig
from services.atlas.app.schemas.walk import TraceRecord, WalkDocument
from workers.pool import fan_out
from workers.potential.harmonic import solve_escape
from workers.tiling.square_tiling import build_tiling
from workers.walks.walk_mc import run_walk


def run(cfg: RunConfig) -> int:
    net = load_network(cfg.source)
    start = int(cfg.params.get("start", net.root))
    absorb = bool(cfg.params.get("absorb_root", False))
    n = cfg.n or 1
    tiling = build_tiling(net, solve_escape(net, cfg.tol), tol=cfg.tol)
    traces = fan_out(
        lambda i: run_walk(net, start, cfg.seed, absorb, index=i, tiling=tiling), range(n)
    )
    doc = WalkDocument(
        header=header(cfg),
        network=net.name,
        start=start,
        absorb_at_root=absorb,
        traces=[
            TraceRecord(
                index=t.index, path=list(t.path), exit_vertex=t.exit_vertex,
                exit_theta=t.exit_theta,
            )
            for t in traces
        ],
    )
    path = write_document(out_path(cfg, f"{stem(cfg.source)}.walks.json"), doc)
    mean = sum(t.steps for t in traces) / n
    print(f"{n} walks from {start}: mean length {mean:.2f} -> {path}")
    return EXIT_OK
