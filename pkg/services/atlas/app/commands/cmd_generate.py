"""generate: 写出网络族的图文件。"""

from __future__ import annotations

from providers.storage.local_io import write_document
from services.atlas.app.commands._common import header, load_network, out_path, stem
from services.atlas.app.core.exceptions import EXIT_OK
from services.atlas.app.schemas.run_config import RunConfig
from workers.network.planar_network import network_to_document


def run(cfg: RunConfig) -> int:
    net = load_network(cfg.source)
    doc = network_to_document(net).model_copy(update={"header": header(cfg)})
    path = write_document(out_path(cfg, f"{stem(cfg.source)}.graph.json"), doc)
    print(f"{net.name}: V={net.n_vertices} E={net.n_edges} |B|={len(net.absorbing)} -> {path}")
    return EXIT_OK
