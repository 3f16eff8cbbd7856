"""experiment: 运行命名实验, 写 JSON 报告与 Markdown 摘要。"""

from __future__ import annotations

from orchestrator.engine import render_markdown, run_experiment
from providers.storage.local_io import write_document, write_text
from services.atlas.app.commands._common import out_path
from services.atlas.app.commands.cmd_pack import parse_mode
from services.atlas.app.core.exceptions import EXIT_FAILURE, EXIT_OK
from services.atlas.app.schemas.run_config import RunConfig


def run(cfg: RunConfig) -> int:
    name = cfg.source or ""
    overrides = dict(cfg.params)
    if cfg.n is not None:
        overrides["n"] = cfg.n
    if cfg.depths:
        overrides["depths"] = cfg.depths
    if cfg.mode and name in ("compare", "packing"):
        overrides["modes"] = [parse_mode(cfg.mode).value]
    elif cfg.mode:
        overrides["mode"] = cfg.mode

    report = run_experiment(
        name, overrides, seed=cfg.seed, tol=cfg.tol, header_config=cfg.header_config()
    )
    write_document(out_path(cfg, f"{name}.report.json"), report)
    write_text(out_path(cfg, f"{name}.report.md"), render_markdown(report))

    for c in report.checks:
        stat = "-" if c.statistic is None else f"{c.statistic:.6g}"
        print(f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {stat}")
    return EXIT_OK if report.passed else EXIT_FAILURE
