# -*- coding: utf-8 -*-
"""
网络族生成器 (canonical network families)

series(n) / parallel(k,n) / hyp7(radius) / k4 / grid(w,h) / triangle.
All generators are deterministic; hyp7 numbers vertices layer by layer so
vertex ids agree across radii.
"""

from __future__ import annotations

import re
from typing import Callable

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import SizeCap, UsageError
from services.atlas.app.schemas.graph import GraphDocument
from workers.network.planar_network import (
    TRIANGULATION,
    PlanarNetwork,
    build_network,
)


class _MapBuilder:
    """Accumulates edges; edge k owns darts 2k (u->v) and 2k+1 (v->u)."""

    def __init__(self, n_vertices: int):
        self.n = n_vertices
        self.edges: list[tuple[int, int]] = []
        self.rot: list[list[int]] = [[] for _ in range(n_vertices)]
        self._key: dict[tuple[int, int], int] = {}

    def edge(self, u: int, v: int) -> int:
        k = len(self.edges)
        self.edges.append((u, v))
        self._key.setdefault((min(u, v), max(u, v)), k)
        return k

    def dart(self, k: int, at: int) -> int:
        return 2 * k if self.edges[k][0] == at else 2 * k + 1

    def dart_to(self, u: int, v: int) -> int:
        return self.dart(self._key[(min(u, v), max(u, v))], u)

    def set_rotation(self, v: int, edge_ids: list[int]) -> None:
        self.rot[v] = [self.dart(k, v) for k in edge_ids]

    def set_rotation_by_neighbors(self, v: int, nbrs: list[int]) -> None:
        """Simple graphs only: creates missing edges on first mention."""
        ids = []
        for u in nbrs:
            key = (min(u, v), max(u, v))
            if key not in self._key:
                self.edge(v, u)
            ids.append(self._key[key])
        self.set_rotation(v, ids)

    def build(
        self,
        name: str,
        root: int,
        absorbing: list[int],
        outer_dart: int,
        triangulation: bool = False,
    ) -> PlanarNetwork:
        doc = GraphDocument(
            name=name,
            vertices=self.n,
            darts=[(2 * k, 2 * k + 1) for k in range(len(self.edges))],
            rotations=self.rot,
            conductances=[1.0] * len(self.edges),
            root=root,
            absorbing=sorted(absorbing),
            outer_dart=outer_dart,
            flags=[TRIANGULATION] if triangulation else [],
        )
        return build_network(doc)


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise UsageError(msg)


# -------------------------------------------------------------------------
# 1. 神谕族 (oracle fixtures)
# -------------------------------------------------------------------------
def series(n: int) -> PlanarNetwork:
    """Path rho=0 - 1 - ... - n with B = {n}."""
    _need(n >= 1, "series(n) needs n >= 1")
    b = _MapBuilder(n + 1)
    ids = [b.edge(i, i + 1) for i in range(n)]
    b.set_rotation(0, [ids[0]])
    for i in range(1, n):
        b.set_rotation(i, [ids[i - 1], ids[i]])
    b.set_rotation(n, [ids[n - 1]])
    return b.build(f"series({n})", root=0, absorbing=[n], outer_dart=0)


def parallel(k: int, n: int) -> PlanarNetwork:
    """k disjoint paths of n edges between rho=0 and t=V-1; B = {t}."""
    _need(k >= 1 and n >= 1, "parallel(k,n) needs k, n >= 1")
    V = 2 + k * (n - 1)
    t = V - 1
    b = _MapBuilder(V)
    first, last = [], []
    for j in range(k):
        path = [0] + [1 + j * (n - 1) + i for i in range(n - 1)] + [t]
        ids = [b.edge(path[i], path[i + 1]) for i in range(n)]
        for i in range(1, n):
            b.set_rotation(path[i], [ids[i - 1], ids[i]])
        first.append(ids[0])
        last.append(ids[-1])
    b.set_rotation(0, first)
    b.set_rotation(t, last[::-1])
    return b.build(
        f"parallel({k},{n})", root=0, absorbing=[t], outer_dart=b.dart(first[-1], 0)
    )


def _disc_fan(name: str, n_outer: int, with_center: bool) -> PlanarNetwork:
    # outer vertices listed counterclockwise; rotation at x is [next, (center), prev]
    off = 1 if with_center else 0
    outer = [off + i for i in range(n_outer)]
    b = _MapBuilder(n_outer + off)
    if with_center:
        b.set_rotation_by_neighbors(0, outer)
    for i, x in enumerate(outer):
        nxt, prv = outer[(i + 1) % n_outer], outer[i - 1]
        b.set_rotation_by_neighbors(x, [nxt, 0, prv] if with_center else [nxt, prv])
    root = 0
    absorbing = outer if with_center else outer[1:]
    return b.build(
        name,
        root=root,
        absorbing=absorbing,
        outer_dart=b.dart_to(outer[0], outer[-1]),
        triangulation=True,
    )


def k4() -> PlanarNetwork:
    """Interior rho=0 joined to the outer triangle 1, 2, 3 (all absorbing)."""
    return _disc_fan("k4", 3, with_center=True)


def triangle() -> PlanarNetwork:
    """Single triangle 0, 1, 2 with rho=0 and B={1, 2}."""
    return _disc_fan("triangle", 3, with_center=False)


def grid(w: int, h: int) -> PlanarNetwork:
    """w x h square grid; rho at the centre, B = grid boundary."""
    _need(w >= 3 and h >= 3, "grid(w,h) needs w, h >= 3 so the root is interior")
    vid = lambda i, j: j * w + i  # noqa: E731
    b = _MapBuilder(w * h)
    for j in range(h):
        for i in range(w):
            nbrs = []
            for di, dj in ((1, 0), (0, 1), (-1, 0), (0, -1)):
                if 0 <= i + di < w and 0 <= j + dj < h:
                    nbrs.append(vid(i + di, j + dj))
            b.set_rotation_by_neighbors(vid(i, j), nbrs)
    absorbing = [
        vid(i, j) for j in range(h) for i in range(w) if i in (0, w - 1) or j in (0, h - 1)
    ]
    return b.build(
        f"grid({w},{h})",
        root=vid(w // 2, h // 2),
        absorbing=absorbing,
        outer_dart=b.dart_to(vid(0, 0), vid(0, 1)),
    )


# -------------------------------------------------------------------------
# 2. 7-正则双曲三角剖分的组合球 (hyp7)
# -------------------------------------------------------------------------
def hyp7(radius: int) -> PlanarNetwork:
    """
    Combinatorial ball of the 7-regular triangulation, grown layer by layer.

    Each layer is a counterclockwise cycle. A vertex v_i of the current layer
    receives 7 - deg(v_i) outward neighbours: an apex shared with v_{i-1}, an
    apex shared with v_{i+1} and private vertices in between. Rotation at a
    layer vertex: [next, inward..., prev, outward...].
    """
    _need(radius >= 1, "hyp7(radius) needs radius >= 1")
    if radius > settings.HYP7_RADIUS_CAP:
        raise SizeCap(f"hyp7 radius {radius} exceeds cap {settings.HYP7_RADIUS_CAP}")

    layer = list(range(1, 8))
    inward: dict[int, list[int]] = {v: [0] for v in layer}
    nbrs: dict[int, list[int]] = {0: list(layer)}
    n_vertices = 8

    for depth in range(1, radius + 1):
        m = len(layer)
        nxt = {layer[i]: layer[(i + 1) % m] for i in range(m)}
        prv = {layer[i]: layer[i - 1] for i in range(m)}
        if depth == radius:
            for v in layer:
                nbrs[v] = [nxt[v], *inward[v], prv[v]]
            break

        privates: list[list[int]] = []
        apex: list[int] = []
        for v in layer:
            n_out = 7 - (2 + len(inward[v]))
            privates.append(list(range(n_vertices, n_vertices + n_out - 2)))
            n_vertices += n_out - 2
            apex.append(n_vertices)
            n_vertices += 1

        new_layer: list[int] = []
        new_inward: dict[int, list[int]] = {}
        for i, v in enumerate(layer):
            new_layer.extend(privates[i])
            new_layer.append(apex[i])
            for p in privates[i]:
                new_inward[p] = [v]
            new_inward[apex[i]] = [layer[(i + 1) % m], v]
            outward = [apex[i - 1], *privates[i], apex[i]]
            nbrs[v] = [nxt[v], *inward[v], prv[v], *outward]
        layer, inward = new_layer, new_inward

    b = _MapBuilder(n_vertices)
    for v in range(n_vertices):
        b.set_rotation_by_neighbors(v, nbrs[v])
    return b.build(
        f"hyp7({radius})",
        root=0,
        absorbing=layer,
        outer_dart=b.dart_to(layer[0], layer[-1]),
        triangulation=True,
    )


# -------------------------------------------------------------------------
# 3. 入口 (family dispatch)
# -------------------------------------------------------------------------
FAMILIES: dict[str, Callable[..., PlanarNetwork]] = {
    "series": series,
    "parallel": parallel,
    "hyp7": hyp7,
    "k4": k4,
    "grid": grid,
    "triangle": triangle,
}

_FAMILY_RE = re.compile(r"^\s*([a-z0-9]+?)\s*(?:\(\s*([0-9,\s]*)\s*\))?\s*$")


def parse_family(spec: str) -> tuple[str, tuple[int, ...]]:
    """'hyp7(4)' -> ('hyp7', (4,)); 'k4' -> ('k4', ())."""
    m = _FAMILY_RE.match(spec)
    if not m or m.group(1) not in FAMILIES:
        raise UsageError(f"unknown network family: {spec!r}", known=sorted(FAMILIES))
    args = tuple(int(x) for x in (m.group(2) or "").split(",") if x.strip())
    return m.group(1), args


def generate(family: str, *params: int) -> PlanarNetwork:
    name, args = (family, tuple(params)) if family in FAMILIES else parse_family(family)
    try:
        return FAMILIES[name](*args)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name}: {args}") from exc
