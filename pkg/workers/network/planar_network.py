# -*- coding: utf-8 -*-
"""
平面网络 (plane networks as rotation systems)

A network is a combinatorial map: darts paired by ``reverse`` and cyclically
ordered around each vertex by ``next_around`` (counterclockwise). Faces are the
orbits of ``reverse ∘ next_around``; the corner of dart d is the region between
d and next_around(d) at its tail, and the following corner of the same face is
reverse(next_around(d)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse import csgraph

from services.atlas.app.core.exceptions import (
    BadInvolution,
    NetworkError,
    NoAbsorbingSet,
    NonPositiveConductance,
    NotConnected,
    NotPlanar,
    NotTriangulation,
    RootAbsorbing,
)
from services.atlas.app.schemas.graph import GraphDocument

TRIANGULATION = "triangulation"
CLOCKWISE = "clockwise"


@dataclass(frozen=True)
class FaceList:
    cycles: tuple[tuple[int, ...], ...]
    face_of: np.ndarray  # dart -> face id
    outer: int

    def __len__(self) -> int:
        return len(self.cycles)

    @property
    def inner(self) -> list[int]:
        return [f for f in range(len(self.cycles)) if f != self.outer]


@dataclass(frozen=True, eq=False)
class PlanarNetwork:
    n_vertices: int
    reverse: np.ndarray
    next_around: np.ndarray
    tail: np.ndarray
    edge_of: np.ndarray
    edge_darts: np.ndarray  # (E, 2); column 0 is the canonical dart
    conductance: np.ndarray
    rotations: tuple[tuple[int, ...], ...]
    root: int
    absorbing: frozenset[int]
    outer_dart: int | None = None
    flags: frozenset[str] = field(default_factory=frozenset)
    name: str = "network"

    # ---------- sizes ----------
    @property
    def n_darts(self) -> int:
        return int(self.reverse.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.edge_darts.shape[0])

    @property
    def is_triangulation(self) -> bool:
        return TRIANGULATION in self.flags

    # ---------- derived arrays ----------
    @cached_property
    def head(self) -> np.ndarray:
        return _frozen(self.tail[self.reverse])

    @cached_property
    def dart_conductance(self) -> np.ndarray:
        return _frozen(self.conductance[self.edge_of])

    @cached_property
    def degree(self) -> np.ndarray:
        return _frozen(np.bincount(self.tail, minlength=self.n_vertices))

    @cached_property
    def vertex_conductance(self) -> np.ndarray:
        """c(v): sum of conductances over darts leaving v."""
        return _frozen(
            np.bincount(self.tail, weights=self.dart_conductance, minlength=self.n_vertices)
        )

    @cached_property
    def boundary(self) -> np.ndarray:
        return _frozen(np.array(sorted(self.absorbing), dtype=np.int64))

    @cached_property
    def absorbing_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary] = True
        return _frozen(mask)

    def darts_at(self, v: int) -> tuple[int, ...]:
        return self.rotations[v]

    def neighbors(self, v: int) -> list[int]:
        return [int(self.head[d]) for d in self.rotations[v]]

    @cached_property
    def is_simple(self) -> bool:
        t, h = self.tail[self.edge_darts[:, 0]], self.head[self.edge_darts[:, 0]]
        if np.any(t == h):
            return False
        pairs = {(min(a, b), max(a, b)) for a, b in zip(t.tolist(), h.tolist())}
        return len(pairs) == self.n_edges

    # ---------- matrices ----------
    def adjacency(self, weighted: bool = True) -> sparse.csr_matrix:
        """Symmetric (weighted) adjacency; self-loops dropped."""
        keep = self.tail != self.head
        data = self.dart_conductance[keep] if weighted else np.ones(int(keep.sum()))
        a = sparse.coo_matrix(
            (data, (self.tail[keep], self.head[keep])),
            shape=(self.n_vertices, self.n_vertices),
        )
        return a.tocsr()

    @cached_property
    def laplacian(self) -> sparse.csr_matrix:
        a = self.adjacency()
        d = np.asarray(a.sum(axis=1)).ravel()
        return (sparse.diags(d) - a).tocsr()

    def distances_from(self, v: int) -> np.ndarray:
        """Graph distance (unweighted) from v to every vertex."""
        dist = csgraph.shortest_path(
            self.adjacency(weighted=False), unweighted=True, directed=False, indices=v
        )
        return dist.astype(np.int64)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        dist = csgraph.shortest_path(
            self.adjacency(weighted=False), unweighted=True, directed=False
        )
        return dist.astype(np.int64)

    def ball(self, v: int, radius: int) -> np.ndarray:
        return np.flatnonzero(self.distances_from(v) <= radius)

    # ---------- faces ----------
    @cached_property
    def faces(self) -> FaceList:
        return faces(self)

    def outer_cycle(self) -> list[int]:
        """Vertices of the outer face, counterclockwise, first occurrence kept."""
        fl = self.faces
        seen: list[int] = []
        for d in fl.cycles[fl.outer]:
            v = int(self.tail[d])
            if v not in seen:
                seen.append(v)
        return seen

    def interior_vertices(self) -> np.ndarray:
        """Vertices not on the outer face (circle-packing interior)."""
        on_outer = np.zeros(self.n_vertices, dtype=bool)
        on_outer[self.outer_cycle()] = True
        return np.flatnonzero(~on_outer)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


# -------------------------------------------------------------------------
# 1. 构建与校验 (build + validate)
# -------------------------------------------------------------------------
def build_network(doc: GraphDocument) -> PlanarNetwork:
    n_darts = 2 * len(doc.darts)
    reverse = np.full(n_darts, -1, dtype=np.int64)
    edge_of = np.full(n_darts, -1, dtype=np.int64)
    for k, (d, e) in enumerate(doc.darts):
        if d == e or not (0 <= d < n_darts and 0 <= e < n_darts):
            raise BadInvolution(f"edge {k}: invalid dart pair ({d}, {e})")
        if reverse[d] >= 0 or reverse[e] >= 0:
            raise BadInvolution(f"edge {k}: dart listed twice", edge=k)
        reverse[d], reverse[e] = e, d
        edge_of[d] = edge_of[e] = k

    tail = np.full(n_darts, -1, dtype=np.int64)
    next_around = np.full(n_darts, -1, dtype=np.int64)
    for v, rot in enumerate(doc.rotations):
        for i, d in enumerate(rot):
            if not 0 <= d < n_darts or tail[d] >= 0:
                raise BadInvolution(f"vertex {v}: dart {d} unknown or in two rotations")
            tail[d] = v
            next_around[d] = rot[(i + 1) % len(rot)]
    if np.any(tail < 0):
        raise BadInvolution("rotations must cover every dart", missing=int(np.argmin(tail)))

    cond = np.asarray(doc.conductances, dtype=float)
    if cond.size and (not np.all(np.isfinite(cond)) or np.any(cond <= 0)):
        bad = int(np.flatnonzero(~(cond > 0) | ~np.isfinite(cond))[0])
        raise NonPositiveConductance(f"edge {bad} has conductance {cond[bad]}", edge=bad)

    V = doc.vertices
    if not 0 <= doc.root < V:
        raise NetworkError(f"root {doc.root} out of range")
    if any(not 0 <= b < V for b in doc.absorbing):
        raise NetworkError("absorbing vertex out of range")
    if not doc.absorbing:
        raise NoAbsorbingSet("absorbing set must be nonempty")
    if doc.root in doc.absorbing:
        raise RootAbsorbing(f"root {doc.root} is absorbing")
    if doc.outer_dart is not None and not 0 <= doc.outer_dart < n_darts:
        raise NetworkError(f"outer_dart {doc.outer_dart} out of range")

    edge_darts = np.asarray(doc.darts, dtype=np.int64).reshape(-1, 2)
    net = PlanarNetwork(
        n_vertices=V,
        reverse=_frozen(reverse),
        next_around=_frozen(next_around),
        tail=_frozen(tail),
        edge_of=_frozen(edge_of),
        edge_darts=_frozen(edge_darts),
        conductance=_frozen(cond),
        rotations=tuple(tuple(r) for r in doc.rotations),
        root=doc.root,
        absorbing=frozenset(doc.absorbing),
        outer_dart=doc.outer_dart,
        flags=frozenset(doc.flags),
        name=doc.name,
    )

    n_comp, _ = csgraph.connected_components(net.adjacency(weighted=False), directed=False)
    if n_comp != 1:
        raise NotConnected(f"network has {n_comp} components", components=int(n_comp))

    euler = V - net.n_edges + len(net.faces)
    if euler != 2:
        raise NotPlanar(f"V - E + F = {euler}, expected 2", euler=euler)

    if net.is_triangulation:
        _check_triangulation(net)

    logger.bind(network=net.name).debug(
        "network built", vertices=V, edges=net.n_edges, faces=len(net.faces)
    )
    return net


def _check_triangulation(net: PlanarNetwork) -> None:
    fl = net.faces
    if not net.is_simple:
        raise NotTriangulation("triangulation must be simple (no loops or multi-edges)")
    for f in fl.inner:
        if len(fl.cycles[f]) != 3:
            raise NotTriangulation(f"face {f} has {len(fl.cycles[f])} sides", face=f)


def faces(net: PlanarNetwork) -> FaceList:
    face_of = np.full(net.n_darts, -1, dtype=np.int64)
    cycles: list[tuple[int, ...]] = []
    for start in range(net.n_darts):
        if face_of[start] >= 0:
            continue
        cyc = []
        d = start
        while face_of[d] < 0:
            face_of[d] = len(cycles)
            cyc.append(d)
            d = int(net.reverse[net.next_around[d]])
        cycles.append(tuple(cyc))

    if net.outer_dart is not None:
        outer = int(face_of[net.outer_dart])
    else:
        outer = max(range(len(cycles)), key=lambda f: (len(cycles[f]), -f))
        logger.warning("no outer_dart given; using the longest face", face=outer)
    return FaceList(cycles=tuple(cycles), face_of=_frozen(face_of), outer=outer)


def degree_bound(net: PlanarNetwork) -> float:
    """Minimal M with deg(v) <= M and M^-1 <= c(e) <= M."""
    c = net.conductance
    return float(max(net.degree.max(), c.max(), (1.0 / c).max()))


def network_to_document(net: PlanarNetwork) -> GraphDocument:
    return GraphDocument(
        name=net.name,
        vertices=net.n_vertices,
        darts=[(int(a), int(b)) for a, b in net.edge_darts],
        rotations=[list(r) for r in net.rotations],
        conductances=[float(c) for c in net.conductance],
        root=net.root,
        absorbing=sorted(net.absorbing),
        outer_dart=net.outer_dart,
        flags=sorted(net.flags),
    )
