# -*- coding: utf-8 -*-
"""
插值路径 (paths through listed vertices, guided by straight segments)

Tiling version: a segment on the unrolled cylinder between points of the
rectangles of consecutive vertices; every rectangle it crosses contributes its
edge. Packing version: a segment between points of consecutive circles; every
circle it crosses contributes its vertex. Crossed cells are chained into a
path; a gap between consecutive cells is bridged by a BFS repair (logged).

Segment endpoints are jittered inside the cells; a segment through a corner or
tangent to a circle is re-sampled, at most RESAMPLE_CAP times.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import DegenerateCrossing, TangentSegment, UsageError
from workers.network.planar_network import PlanarNetwork, degree_bound
from workers.packing.circle_packing import CirclePacking
from workers.tiling.square_tiling import RectangleTiling, wrap

_EPS = 1e-12


@dataclass(frozen=True)
class InterpolatedPath:
    vertices: tuple[int, ...]
    listed: tuple[int, ...]
    cells: tuple[int, ...]  # crossed edge ids (tiling) or vertices (packing)
    repairs: int
    attempts: int
    lower_height_slack: float | None = None  # tiling only, diagnostic

    def is_path(self, net: PlanarNetwork) -> bool:
        adj = net.adjacency(weighted=False)
        steps = all(adj[a, b] > 0 for a, b in zip(self.vertices, self.vertices[1:]))
        return steps and set(self.listed) <= set(self.vertices)


# -------------------------------------------------------------------------
# 1. 公共: 把单元串成路径 (chain cells into a path)
# -------------------------------------------------------------------------
def _bfs(net: PlanarNetwork, a: int, b: int, allowed: set[int] | None) -> list[int]:
    prev = {a: a}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        if v == b:
            break
        for u in net.neighbors(v):
            if u not in prev and (allowed is None or u in allowed):
                prev[u] = v
                queue.append(u)
    if b not in prev:
        return _bfs(net, a, b, None) if allowed is not None else []
    out = [b]
    while out[-1] != a:
        out.append(prev[out[-1]])
    return out[::-1]


def _chain(net: PlanarNetwork, candidates: list[int], pool: set[int]) -> tuple[list[int], int]:
    path = [candidates[0]]
    repairs = 0
    nbrs = [set(net.neighbors(v)) for v in range(net.n_vertices)]
    for c in candidates[1:]:
        last = path[-1]
        if c == last:
            continue
        if c in nbrs[last]:
            path.append(c)
            continue
        bridge = _bfs(net, last, c, pool)
        repairs += 1
        path.extend(bridge[1:])
    return path, repairs


def _order_endpoints(net: PlanarNetwork, last: int, x: int, y: int) -> tuple[int, int]:
    near = {last, *net.neighbors(last)}
    return (x, y) if x in near or y not in near else (y, x)


def _retrying() -> Retrying:
    return Retrying(
        stop=stop_after_attempt(settings.RESAMPLE_CAP),
        retry=retry_if_exception_type((DegenerateCrossing, TangentSegment)),
        reraise=True,
    )


def _check_listed(net: PlanarNetwork, vertices: Sequence[int]) -> list[int]:
    vs = [int(v) for v in vertices]
    if not vs:
        raise UsageError("interpolation needs at least one vertex")
    if any(not 0 <= v < net.n_vertices for v in vs):
        raise UsageError("vertex out of range")
    return vs


# -------------------------------------------------------------------------
# 2. 矩形铺砌路径 (tiling_interpolate_path)
# -------------------------------------------------------------------------
def _anchor_point(net, tiling, v, rng) -> tuple[float, float]:
    """A point inside a rectangle of an edge at v, near v's end."""
    a, w, lo, hi = tiling.rect_arrays()
    own = []
    for d in net.darts_at(v):
        k = int(net.edge_of[d])
        if w[k] <= 0:
            continue
        r = tiling.rects[k]
        at_bottom = int(net.tail[r.dart]) == v
        if at_bottom or v in net.absorbing:
            own.append((k, at_bottom))
    if not own:
        raise UsageError(f"vertex {v} owns no nondegenerate rectangle")
    k, at_bottom = own[int(rng.integers(len(own)))]
    u, s = rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.25)
    theta = a[k] + u * w[k]
    y = lo[k] + s * (hi[k] - lo[k]) if at_bottom else hi[k] - s * (hi[k] - lo[k])
    return float(np.mod(theta, tiling.eta)), float(y)


def _crossed_rects(tiling: RectangleTiling, p, q) -> list[int]:
    eta = tiling.eta
    a, w, lo, hi = tiling.rect_arrays()
    dx = float(wrap(q[0] - p[0], eta))
    dy = q[1] - p[1]
    hits: list[tuple[float, int]] = []
    for k in np.flatnonzero(w > 0):
        for shift in (-eta, 0.0, eta):
            x0, x1 = a[k] + shift, a[k] + w[k] + shift
            t_in, t_out = _slab(p[0], dx, x0, x1, 0.0, 1.0)
            t_in, t_out = _slab(p[1], dy, lo[k], hi[k], t_in, t_out)
            if t_out - t_in > _EPS:
                hits.append((t_in, int(k)))
            elif t_out - t_in > -_EPS and 0.0 < t_in < 1.0:
                raise DegenerateCrossing(f"segment touches a corner of rectangle {k}")
    hits.sort()
    return [k for _, k in hits]


def _slab(p0: float, d: float, lo: float, hi: float, t_in: float, t_out: float):
    if abs(d) < _EPS:
        return (t_in, t_out) if lo < p0 < hi else (1.0, 0.0)
    t0, t1 = (lo - p0) / d, (hi - p0) / d
    if t0 > t1:
        t0, t1 = t1, t0
    return max(t_in, t0), min(t_out, t1)


def tiling_interpolate_path(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    vertices: Sequence[int],
    *,
    seed: int = 0,
) -> InterpolatedPath:
    vs = _check_listed(net, vertices)
    rng = np.random.Generator(np.random.Philox(key=np.array([0, seed], dtype=np.uint64)))
    candidates = [vs[0]]
    cells: list[int] = []
    attempts = 0
    for v, w in zip(vs, vs[1:]):
        for attempt in _retrying():
            with attempt:
                attempts += 1
                p, q = _anchor_point(net, tiling, v, rng), _anchor_point(net, tiling, w, rng)
                crossed = _crossed_rects(tiling, p, q)
        cells.extend(crossed)
        for k in crossed:
            d = net.edge_darts[k, 0]
            x, y = _order_endpoints(net, candidates[-1], int(net.tail[d]), int(net.head[d]))
            candidates.extend((x, y))
        candidates.append(w)

    pool = set(candidates)
    path, repairs = _chain(net, candidates, pool)
    if repairs:
        logger.bind(network=net.name).warning("interpolation path repaired", repairs=repairs)

    slack = None
    if len(vs) >= 2 and net.is_triangulation:
        M = degree_bound(net)
        floor = (1 + M**-3) * min(tiling.y[vs[0]], tiling.y[vs[-1]]) - M**-3
        slack = float(min(tiling.y[path]) - floor)
    return InterpolatedPath(
        vertices=tuple(path),
        listed=tuple(vs),
        cells=tuple(cells),
        repairs=repairs,
        attempts=attempts,
        lower_height_slack=slack,
    )


# -------------------------------------------------------------------------
# 3. 圆填充路径 (packing_interpolate_path)
# -------------------------------------------------------------------------
def _crossed_circles(packing: CirclePacking, p: complex, q: complex) -> list[int]:
    z, r = packing.z, packing.radius
    d = q - p
    L2 = abs(d) ** 2
    t = np.clip(((z - p) * np.conj(d)).real / L2, 0.0, 1.0) if L2 > 0 else np.zeros(len(z))
    gap = np.abs(p + t * d - z) - r
    tangent = np.abs(gap) < _EPS * max(1.0, float(r.max()))
    if tangent.any():
        raise TangentSegment(f"segment tangent to circle {int(np.flatnonzero(tangent)[0])}")
    hit = np.flatnonzero(gap < 0)
    return [int(v) for v in hit[np.argsort(t[hit], kind="stable")]]


def packing_interpolate_path(
    net: PlanarNetwork,
    packing: CirclePacking,
    vertices: Sequence[int],
    *,
    seed: int = 0,
) -> InterpolatedPath:
    vs = _check_listed(net, vertices)
    rng = np.random.Generator(np.random.Philox(key=np.array([1, seed], dtype=np.uint64)))
    z, r = packing.z, packing.radius

    def jitter(v: int) -> complex:
        return complex(z[v] + r[v] * rng.uniform(0.0, 0.5) * np.exp(2j * np.pi * rng.random()))

    candidates = [vs[0]]
    cells: list[int] = []
    attempts = 0
    for v, w in zip(vs, vs[1:]):
        for attempt in _retrying():
            with attempt:
                attempts += 1
                crossed = _crossed_circles(packing, jitter(v), jitter(w))
        cells.extend(crossed)
        candidates.extend(crossed)
        candidates.append(w)

    path, repairs = _chain(net, candidates, set(candidates))
    if repairs:
        logger.bind(network=net.name).warning("interpolation path repaired", repairs=repairs)
    return InterpolatedPath(
        vertices=tuple(path),
        listed=tuple(vs),
        cells=tuple(cells),
        repairs=repairs,
        attempts=attempts,
    )
