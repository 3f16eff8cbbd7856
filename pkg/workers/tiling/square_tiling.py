# -*- coding: utf-8 -*-
"""
矩形铺砌 (rectangle tiling of the cylinder R/etaZ x [0,1])

Edge e with y increasing along dart d owns S(e) = I(e) x [y(tail d), y(head d)]
with width |flow(e)|. The horizontal coordinate comes from a harmonic
conjugate of y stored on corners (dart d names the corner between d and
next_around(d)):

* around a vertex outside B: theta(corner next(x)) = theta(corner x) - flow(next(x));
* corners of an inner face share one value;
* corners of the outer face share a value only between consecutive corners at
  vertices outside B (the outer face is cut at every boundary vertex).

Values live mod eta; the integration is a breadth-first sweep from the seam
corner (theta = 0) followed by a closure test on every constraint.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np
from loguru import logger

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import InconsistentFlow, ZeroEta
from services.atlas.app.schemas.tiling import (
    RectangleRecord,
    TilingDocument,
    TilingReport,
    VertexIntervalRecord,
)
from workers.network.planar_network import CLOCKWISE, PlanarNetwork, degree_bound
from workers.potential.harmonic import HarmonicProfile, exit_distribution


@dataclass(frozen=True)
class Rectangle:
    dart: int  # dart along which y increases (canonical dart if degenerate)
    theta_start: float
    width: float
    y_lo: float
    y_hi: float

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo

    @property
    def degenerate(self) -> bool:
        return self.width == 0.0


@dataclass(frozen=True)
class DualPotential:
    corner_theta: np.ndarray  # per dart corner, NaN where unconstrained
    theta: np.ndarray  # per face; NaN for the outer face
    seam: tuple[int, ...]  # faces from the seam face to the outer face
    closure_defect: float


@dataclass(frozen=True)
class RectangleTiling:
    eta: float
    rects: tuple[Rectangle, ...]  # indexed by edge id
    interval_start: np.ndarray
    interval_length: np.ndarray
    theta_rep: np.ndarray
    y: np.ndarray
    dual: DualPotential
    clockwise: bool = False

    def rect_arrays(self) -> tuple[np.ndarray, ...]:
        a = np.array([r.theta_start for r in self.rects])
        w = np.array([r.width for r in self.rects])
        lo = np.array([r.y_lo for r in self.rects])
        hi = np.array([r.y_hi for r in self.rects])
        return a, w, lo, hi


# -------------------------------------------------------------------------
# 1. 圆周区间工具 (arcs on R/etaZ)
# -------------------------------------------------------------------------
def wrap(z, eta: float):
    """Representative of z mod eta in [-eta/2, eta/2]."""
    return z - eta * np.round(np.asarray(z) / eta)


def arc_overlap(a, w, s: float, length: float, eta: float):
    """Overlap length of arcs [a, a+w] and [s, s+length]; vectorized over (a, w)."""
    rel = np.mod(np.asarray(a) - s, eta)
    first = np.clip(np.minimum(rel + w, length) - rel, 0.0, None)
    second = np.clip(np.minimum(rel + w - eta, length), 0.0, None)
    return first + second


def merge_arcs(
    starts: np.ndarray, widths: np.ndarray, eta: float, tol: float
) -> tuple[float, float] | None:
    """Union of disjoint arcs as one (start, length), or None if it is not one arc."""
    if len(starts) == 0:
        return None
    total = float(np.sum(widths))
    if total >= eta - tol:
        return 0.0, total
    order = np.argsort(starts, kind="stable")
    s, w = np.asarray(starts)[order], np.asarray(widths)[order]
    gaps = np.mod(np.roll(s, -1) - (s + w), eta)
    gaps = np.where(gaps > eta - tol, gaps - eta, gaps)
    big = np.flatnonzero(gaps > tol)
    if len(big) != 1:
        return None
    return float(np.mod(s[(big[0] + 1) % len(s)], eta)), total


# -------------------------------------------------------------------------
# 2. 对偶积分 (harmonic conjugate on corners)
# -------------------------------------------------------------------------
def _integrate_dual(
    net: PlanarNetwork, flow: np.ndarray, eta: float, seam: int, clockwise: bool, tol: float
) -> DualPotential:
    sign = 1.0 if clockwise else -1.0
    D = net.n_darts
    in_b = net.absorbing_mask[net.tail]
    links: list[list[tuple[int, float]]] = [[] for _ in range(D)]
    cons_a, cons_b, cons_d = [], [], []

    def link(a: int, b: int, delta: float) -> None:
        links[a].append((b, delta))
        links[b].append((a, -delta))
        cons_a.append(a)
        cons_b.append(b)
        cons_d.append(delta)

    for x in range(D):
        if not in_b[x]:
            s = int(net.next_around[x])
            link(x, s, sign * float(flow[s]))
    fl = net.faces
    for f, cyc in enumerate(fl.cycles):
        n = len(cyc)
        for i in range(n if n > 1 else 0):
            a, b = cyc[i], cyc[(i + 1) % n]
            if f != fl.outer or (not in_b[a] and not in_b[b]):
                link(a, b, 0.0)

    theta = np.full(D, np.nan)
    theta[seam] = 0.0
    queue = deque([seam])
    while queue:
        a = queue.popleft()
        for b, delta in links[a]:
            if np.isnan(theta[b]):
                theta[b] = theta[a] + delta
                queue.append(b)

    ca, cb, cd = np.array(cons_a), np.array(cons_b), np.array(cons_d)
    ok = ~np.isnan(theta[ca]) & ~np.isnan(theta[cb])
    defect = float(np.max(np.abs(wrap(theta[cb][ok] - theta[ca][ok] - cd[ok], eta)), initial=0.0))
    if defect > net.n_vertices * tol:
        raise InconsistentFlow(
            f"dual closure defect {defect:.3e} exceeds {net.n_vertices * tol:.1e}",
            defect=defect,
        )

    needed = ~in_b & (flow > 0)
    if np.any(needed & np.isnan(theta)):
        raise InconsistentFlow("corner of a flowing dart unreachable from the seam")

    corner_theta = np.mod(theta, eta)
    face_theta = np.full(len(fl), np.nan)
    for f in fl.inner:
        face_theta[f] = corner_theta[fl.cycles[f][0]]
    for a in (corner_theta, face_theta):
        a.setflags(write=False)
    return DualPotential(
        corner_theta=corner_theta,
        theta=face_theta,
        seam=_seam_faces(net, int(fl.face_of[seam])),
        closure_defect=defect,
    )


def _seam_faces(net: PlanarNetwork, start: int) -> tuple[int, ...]:
    """BFS path in the dual graph from ``start`` to the outer face."""
    fl = net.faces
    parent = {start: -1}
    queue = deque([start])
    while queue:
        f = queue.popleft()
        if f == fl.outer:
            break
        for d in fl.cycles[f]:
            g = int(fl.face_of[net.reverse[d]])
            if g not in parent:
                parent[g] = f
                queue.append(g)
    path, f = [], fl.outer
    while f != -1 and f in parent:
        path.append(f)
        f = parent[f]
    return tuple(reversed(path))


# -------------------------------------------------------------------------
# 3. 构建铺砌 (build_tiling)
# -------------------------------------------------------------------------
def build_tiling(
    net: PlanarNetwork,
    profile: HarmonicProfile,
    *,
    seam_dart: int | None = None,
    clockwise: bool | None = None,
    tol: float | None = None,
) -> RectangleTiling:
    tol = tol or settings.SOLVER_TOL
    eta = profile.eta
    if not eta > tol:
        raise ZeroEta(f"eta = {eta!r}")
    clockwise = CLOCKWISE in net.flags if clockwise is None else clockwise
    seam = net.darts_at(net.root)[0] if seam_dart is None else seam_dart
    if int(net.tail[seam]) != net.root:
        raise InconsistentFlow(f"seam dart {seam} does not leave the root")

    flow, y = profile.flow, profile.y
    dual = _integrate_dual(net, flow, eta, seam, clockwise, tol)
    ct = dual.corner_theta

    rects = []
    for k, (d0, d1) in enumerate(net.edge_darts):
        up = int(d1) if flow[d0] < 0 else int(d0)
        width = abs(float(flow[up]))
        if width > 0:
            start = ct[up] - width if clockwise else ct[up]
        else:
            start = next((ct[d] for d in (up, int(net.reverse[up])) if not np.isnan(ct[d])), 0.0)
        a, b = float(y[net.tail[up]]), float(y[net.head[up]])
        rects.append(
            Rectangle(
                dart=up,
                theta_start=float(np.mod(start, eta)),
                width=width,
                y_lo=min(a, b),
                y_hi=max(a, b),
            )
        )

    starts = np.array([r.theta_start for r in rects])
    widths = np.array([r.width for r in rects])
    i_start = np.full(net.n_vertices, np.nan)
    i_len = np.zeros(net.n_vertices)
    for v in range(net.n_vertices):
        arc = _vertex_arc(net, v, flow, starts, widths, eta, tol)
        if arc is not None:
            i_start[v], i_len[v] = arc
        else:
            inc = [net.edge_of[d] for d in net.darts_at(v)]
            i_start[v] = starts[inc[0]] if inc else np.nan
    theta_rep = np.mod(i_start + i_len / 2.0, eta)
    for arr in (i_start, i_len, theta_rep):
        arr.setflags(write=False)

    n_deg = sum(r.degenerate for r in rects)
    logger.bind(network=net.name).info(
        "tiling built", eta=eta, rectangles=len(rects), degenerate=n_deg,
        closure_defect=dual.closure_defect,
    )
    return RectangleTiling(
        eta=eta,
        rects=tuple(rects),
        interval_start=i_start,
        interval_length=i_len,
        theta_rep=theta_rep,
        y=profile.y,
        dual=dual,
        clockwise=clockwise,
    )


def _up_darts(net: PlanarNetwork, v: int, flow: np.ndarray) -> list[int]:
    return [d for d in net.darts_at(v) if flow[d] > 0]


def _in_darts(net: PlanarNetwork, v: int, flow: np.ndarray) -> list[int]:
    return [d for d in net.darts_at(v) if flow[d] < 0]


def _vertex_arc(net, v, flow, starts, widths, eta, tol):
    darts = _in_darts(net, v, flow) if v in net.absorbing else _up_darts(net, v, flow)
    edges = [int(net.edge_of[d]) for d in darts]
    return merge_arcs(starts[edges], widths[edges], eta, tol)


def vertex_interval(t: RectangleTiling, v: int) -> tuple[float, float]:
    return float(t.interval_start[v]), float(t.interval_length[v])


# -------------------------------------------------------------------------
# 4. 校验 (check_tiling)
# -------------------------------------------------------------------------
def check_tiling(
    t: RectangleTiling,
    net: PlanarNetwork,
    M: float | None = None,
    tol: float = 1e-8,
) -> TilingReport:
    eta = t.eta
    a, w, lo, hi = t.rect_arrays()
    nd = np.flatnonzero(w > 0)
    flow_up = np.zeros(net.n_darts)
    for k, r in enumerate(t.rects):
        flow_up[r.dart] = r.width
        flow_up[net.reverse[r.dart]] = -r.width

    # (2) disjoint interiors
    disjoint: list[tuple[int, int]] = []
    for pos, i in enumerate(nd):
        rest = nd[pos + 1 :]
        yov = np.minimum(hi[i], hi[rest]) - np.maximum(lo[i], lo[rest])
        cand = rest[yov > tol]
        if cand.size:
            ov = arc_overlap(a[cand], w[cand], a[i], w[i], eta)
            disjoint.extend((int(i), int(j)) for j in cand[ov > tol])

    area = float(np.sum(w * (hi - lo)))

    # (1) aspect ratio
    aspect = 0.0
    if nd.size:
        h = hi[nd] - lo[nd]
        c = net.conductance[nd]
        aspect = float(np.max(np.abs(w[nd] / np.where(h > 0, h, np.inf) - c) / c))

    # (3) interval property
    starts = a
    interval_bad: list[int] = []
    for v in range(net.n_vertices):
        if v in net.absorbing:
            continue
        up = merge_arcs(*_arcs(net, _up_darts(net, v, flow_up), starts, w), eta, tol)
        if v == net.root:
            if up is None or abs(up[1] - eta) > tol:
                interval_bad.append(v)
            continue
        down = merge_arcs(*_arcs(net, _in_darts(net, v, flow_up), starts, w), eta, tol)
        if up is None and down is None:
            continue  # isolated in the flow: I(v) is a point
        if (
            up is None
            or down is None
            or abs(up[1] - down[1]) > tol
            or (up[1] < eta - tol and abs(wrap(up[0] - down[0], eta)) > tol)
        ):
            interval_bad.append(v)

    # (5) vertical contacts share a face
    face_bad: list[tuple[int, int]] = []
    fl = net.faces
    for i in nd:
        right = a[i] + w[i]
        touch = nd[(np.abs(wrap(a[nd] - right, eta)) < tol) & (nd != i)]
        for j in touch:
            if min(hi[i], hi[j]) - max(lo[i], lo[j]) <= tol:
                continue
            fi = {int(fl.face_of[d]) for d in net.edge_darts[i]}
            fj = {int(fl.face_of[d]) for d in net.edge_darts[j]}
            if not fi & fj:
                face_bad.append((int(i), int(j)))

    bsum = float(sum(t.interval_length[b] for b in net.absorbing))

    ratio_m2 = ratio_printed = None
    if net.is_triangulation:
        M = M or degree_bound(net)
        inner = [
            v for v in range(net.n_vertices) if v not in net.absorbing and v != net.root
        ]
        if inner:
            lengths = t.interval_length[inner]
            gap = 1.0 - t.y[inner]
            ratio_m2 = float(np.max(lengths / (M**2 * gap)))
            ratio_printed = float(np.max(lengths / (M**-2 * gap)))

    passed = (
        not disjoint
        and abs(area - eta) <= tol
        and aspect <= tol
        and not interval_bad
        and not face_bad
        and abs(bsum - eta) <= tol
    )
    report = TilingReport(
        rectangles=len(t.rects),
        degenerate=int(len(t.rects) - nd.size),
        disjoint_violations=disjoint,
        area=area,
        area_defect=abs(area - eta),
        max_aspect_defect=aspect,
        interval_violations=interval_bad,
        face_adjacency_violations=face_bad,
        boundary_sum_defect=abs(bsum - eta),
        bound_ratio_m2=ratio_m2,
        bound_ratio_printed=ratio_printed,
        passed=passed,
    )
    log = logger.bind(network=net.name)
    (log.info if passed else log.warning)("tiling checked", passed=passed, area=area)
    return report


def _arcs(net: PlanarNetwork, darts: list[int], starts: np.ndarray, widths: np.ndarray):
    edges = [int(net.edge_of[d]) for d in darts]
    return starts[edges], widths[edges]


def harmonic_measure_defect(net: PlanarNetwork, t: RectangleTiling) -> float:
    """max_b |length(I(b))/eta - exact exit probability at b|."""
    exact = exit_distribution(net)
    return max(abs(t.interval_length[b] / t.eta - p) for b, p in exact.items())


# -------------------------------------------------------------------------
# 5. 旋转与导出 (rotation, export)
# -------------------------------------------------------------------------
def rotate_tiling(t: RectangleTiling, offset: float) -> RectangleTiling:
    eta = t.eta
    rects = tuple(
        replace(r, theta_start=float(np.mod(r.theta_start + offset, eta))) for r in t.rects
    )
    return replace(
        t,
        rects=rects,
        interval_start=np.mod(t.interval_start + offset, eta),
        theta_rep=np.mod(t.theta_rep + offset, eta),
    )


def tilings_equal_up_to_rotation(
    t1: RectangleTiling, t2: RectangleTiling, tol: float = 1e-9
) -> bool:
    a1, w1, lo1, hi1 = t1.rect_arrays()
    a2, w2, lo2, hi2 = t2.rect_arrays()
    nd = np.flatnonzero(w1 > 0)
    if nd.size == 0 or abs(t1.eta - t2.eta) > tol:
        return False
    offset = a2[nd[0]] - a1[nd[0]]
    return bool(
        np.allclose(w1, w2, atol=tol)
        and np.allclose(lo1, lo2, atol=tol)
        and np.allclose(hi1, hi2, atol=tol)
        and np.all(np.abs(wrap(a2[nd] - a1[nd] - offset, t1.eta)) <= tol)
    )


def tiling_to_document(t: RectangleTiling) -> TilingDocument:
    return TilingDocument(
        eta=t.eta,
        rectangles=[
            RectangleRecord(
                dart=r.dart, theta_start=r.theta_start, width=r.width, y_lo=r.y_lo, y_hi=r.y_hi
            )
            for r in t.rects
        ],
        vertex_intervals=[
            VertexIntervalRecord(
                vertex=v,
                theta_start=float(np.nan_to_num(t.interval_start[v])),
                length=float(t.interval_length[v]),
                theta=float(np.nan_to_num(t.theta_rep[v])),
            )
            for v in range(len(t.interval_length))
        ],
    )
