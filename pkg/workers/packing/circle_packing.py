# -*- coding: utf-8 -*-
"""
圆填充 (circle packings of finite disc triangulations)

Radii come from the uniform-neighbour angle-sum iteration. Interior vertices are
split into colour classes of pairwise non-adjacent vertices and each class is
updated at once, so a sweep is deterministic and vectorized.

Modes:
* euclidean_fixed_boundary: Euclidean radii, outer-face radii fixed equal;
* hyperbolic_maximal: labels s = exp(-2 h) for hyperbolic radius h, s = 0 on the
  outer face (horocycles), layout in the Poincare disc.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from loguru import logger

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import (
    LayoutInconsistency,
    NonConvergence,
    NotTriangulation,
)
from services.atlas.app.schemas.packing import CircleRecord, PackingDocument, PackingReport
from workers.network.planar_network import PlanarNetwork

TWO_PI = 2.0 * np.pi
SUPERSTEP_FACTOR = 1.4


class PackingMode(str, Enum):
    EUCLIDEAN = "euclidean_fixed_boundary"
    HYPERBOLIC = "hyperbolic_maximal"


@dataclass(frozen=True)
class PackingRadii:
    mode: PackingMode
    label: np.ndarray  # Euclidean radius, or s = exp(-2h) in hyperbolic mode
    residual: float
    sweeps: int
    history: tuple[float, ...]
    interior: np.ndarray

    @property
    def radius(self) -> np.ndarray:
        """Euclidean radii (euclidean mode) or hyperbolic radii (inf on horocycles)."""
        if self.mode is PackingMode.EUCLIDEAN:
            return self.label
        with np.errstate(divide="ignore"):
            return -0.5 * np.log(self.label)


@dataclass(frozen=True)
class CirclePacking:
    mode: PackingMode
    center: np.ndarray  # (V, 2)
    radius: np.ndarray
    boundary: tuple[int, ...]  # outer cycle, counterclockwise
    edges: np.ndarray | None = None  # (E, 2)
    angle_residual: float = 0.0
    tangency_residual: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return self.center[:, 0] + 1j * self.center[:, 1]


# -------------------------------------------------------------------------
# 1. 花瓣角 (petal angles)
# -------------------------------------------------------------------------
def _petal_angle(mode: PackingMode, lv, lu, lw):
    if mode is PackingMode.EUCLIDEAN:
        q = lu * lw / ((lv + lu) * (lv + lw))
    else:
        q = lv * (1.0 - lu) * (1.0 - lw) / ((1.0 - lv * lu) * (1.0 - lv * lw))
    return 2.0 * np.arcsin(np.sqrt(np.clip(q, 0.0, 1.0)))


def flower_angle_sum(center: float, petals: list[float], mode: PackingMode | str) -> float:
    """Angle sum at a centre label surrounded by a closed cycle of petal labels."""
    mode = PackingMode(mode)
    p = np.asarray(petals, dtype=float)
    return float(np.sum(_petal_angle(mode, center, p, np.roll(p, -1))))


def _uniform_neighbor(mode: PackingMode, label, theta, k):
    beta = np.sin(theta / (2.0 * k))
    delta = np.sin(np.pi / k)
    if mode is PackingMode.EUCLIDEAN:
        r_hat = label * beta / (1.0 - beta)
        return r_hat * (1.0 - delta) / delta
    t = np.sqrt(label)
    x_hat = np.clip((t - beta) / (t * (1.0 - beta * t)), 0.0, 1.0)
    q = 2.0 * delta / ((1.0 - x_hat) + np.sqrt((1.0 - x_hat) ** 2 + 4.0 * delta**2 * x_hat))
    return q * q


@dataclass(frozen=True)
class _Flowers:
    tv: np.ndarray
    tu: np.ndarray
    tw: np.ndarray
    interior: np.ndarray
    classes: tuple[np.ndarray, ...]
    degree: np.ndarray


def _flowers(net: PlanarNetwork) -> _Flowers:
    interior = net.interior_vertices()
    is_int = np.zeros(net.n_vertices, dtype=bool)
    is_int[interior] = True
    darts = np.flatnonzero(is_int[net.tail])
    tv = net.tail[darts]
    tu = net.head[darts]
    tw = net.head[net.next_around[darts]]

    colour = np.full(net.n_vertices, -1)
    for v in interior:
        used = {colour[u] for u in net.neighbors(int(v))}
        c = 0
        while c in used:
            c += 1
        colour[v] = c
    classes = tuple(
        interior[colour[interior] == c] for c in range(int(colour.max(initial=-1)) + 1)
    )
    return _Flowers(tv, tu, tw, interior, classes, net.degree)


def _angle_sums(mode: PackingMode, label: np.ndarray, fl: _Flowers, V: int) -> np.ndarray:
    alpha = _petal_angle(mode, label[fl.tv], label[fl.tu], label[fl.tw])
    return np.bincount(fl.tv, weights=alpha, minlength=V)


# -------------------------------------------------------------------------
# 2. 半径迭代 (pack_radii)
# -------------------------------------------------------------------------
def pack_radii(
    net: PlanarNetwork,
    mode: PackingMode | str = PackingMode.HYPERBOLIC,
    tol: float | None = None,
    *,
    boundary_radius: float = 1.0,
    max_sweeps: int | None = None,
    superstep: bool = False,
) -> PackingRadii:
    mode = PackingMode(mode)
    tol = tol or settings.PACKING_TOL
    max_sweeps = max_sweeps or settings.PACKING_MAX_SWEEPS
    if not net.is_triangulation:
        raise NotTriangulation(f"{net.name} is not flagged as a triangulation")

    V = net.n_vertices
    fl = _flowers(net)
    if mode is PackingMode.EUCLIDEAN:
        label = np.full(V, float(boundary_radius))
    else:
        label = np.zeros(V)
        label[fl.interior] = 0.5

    def residual(lab: np.ndarray) -> float:
        if fl.interior.size == 0:
            return 0.0
        sums = _angle_sums(mode, lab, fl, V)
        return float(np.max(np.abs(sums[fl.interior] - TWO_PI)))

    history = [residual(label)]
    sweeps = 0
    log = logger.bind(network=net.name, mode=mode.value)
    while history[-1] >= tol:
        if sweeps >= max_sweeps:
            raise NonConvergence(
                f"packing not converged after {max_sweeps} sweeps", residual=history[-1]
            )
        sweeps += 1
        for cls in fl.classes:
            sums = _angle_sums(mode, label, fl, V)[cls]
            new = _uniform_neighbor(mode, label[cls], sums, fl.degree[cls])
            if superstep:
                # over-relax in log coordinates; labels stay positive
                step = SUPERSTEP_FACTOR * (np.log(new) - np.log(label[cls]))
                new = np.exp(np.log(label[cls]) + step)
                if mode is PackingMode.HYPERBOLIC:
                    new = np.minimum(new, 1.0 - 1e-15)
            label[cls] = new
        history.append(residual(label))
        if history[-1] > history[-2]:
            log.trace("non-monotone sweep", sweep=sweeps, residual=history[-1])

    label.setflags(write=False)
    log.info("radii packed", sweeps=sweeps, residual=history[-1])
    return PackingRadii(
        mode=mode,
        label=label,
        residual=history[-1],
        sweeps=sweeps,
        history=tuple(history),
        interior=fl.interior,
    )


# -------------------------------------------------------------------------
# 3. 布局 (layout)
# -------------------------------------------------------------------------
def _mobius(z, a):
    return (z - a) / (1.0 - np.conj(a) * z)


def _mobius_inv(w, a):
    return (w + a) / (1.0 + np.conj(a) * w)


def layout(
    net: PlanarNetwork,
    radii: PackingRadii,
    tol: float | None = None,
    *,
    first_dart: int | None = None,
) -> CirclePacking:
    tol = tol or settings.LAYOUT_TOL
    mode, lab = radii.mode, radii.label
    hyperbolic = mode is PackingMode.HYPERBOLIC
    V = net.n_vertices
    is_int = np.zeros(V, dtype=bool)
    is_int[radii.interior] = True
    outer = net.faces.outer
    face_of = net.faces.face_of
    boundary = tuple(net.outer_cycle())

    if hyperbolic and radii.interior.size == 0:
        return _horocycle_triple(net, radii, boundary)

    if is_int[net.root] or radii.interior.size == 0:
        origin = net.root
    else:
        origin = int(radii.interior[0])
    x0 = net.darts_at(origin)[0] if first_dart is None else first_dart
    if int(net.tail[x0]) != origin:
        raise LayoutInconsistency(f"first dart {x0} does not leave vertex {origin}")

    z = np.full(V, np.nan + 0j)
    placed = np.zeros(V, dtype=bool)
    placed_by = np.full(V, -1)
    z[origin], placed[origin] = 0.0, True
    w0 = int(net.head[x0])
    if hyperbolic:
        z[w0] = (1 - np.sqrt(lab[origin] * lab[w0])) / (1 + np.sqrt(lab[origin] * lab[w0]))
    else:
        z[w0] = lab[origin] + lab[w0]
    placed[w0], placed_by[w0] = True, origin

    mismatch = 0.0
    queue = deque([origin, w0])

    def place(u: int, a: int, b: int, sign: float) -> None:
        nonlocal mismatch
        alpha = float(_petal_angle(mode, lab[u], lab[a], lab[b]))
        if hyperbolic:
            phi = np.angle(_mobius(z[a], z[u])) + sign * alpha
            dist = (1 - np.sqrt(lab[u] * lab[b])) / (1 + np.sqrt(lab[u] * lab[b]))
            w = dist * np.exp(1j * phi)
            if placed[b]:
                mismatch = max(mismatch, abs(w - _mobius(z[b], z[u])))
                return
            z[b] = _mobius_inv(w, z[u])
        else:
            phi = np.angle(z[a] - z[u]) + sign * alpha
            pred = z[u] + (lab[u] + lab[b]) * np.exp(1j * phi)
            if placed[b]:
                mismatch = max(mismatch, abs(pred - z[b]) / (lab[u] + lab[b]))
                return
            z[b] = pred
        placed[b], placed_by[b] = True, u
        queue.append(b)

    while queue:
        u = queue.popleft()
        if hyperbolic and not is_int[u]:
            continue
        darts = net.darts_at(u)
        n = len(darts)
        i0 = next((i for i, d in enumerate(darts) if placed[net.head[d]]), None)
        if i0 is None:
            continue
        full = True
        for j in range(n):
            x = darts[(i0 + j) % n]
            if face_of[x] == outer:
                full = False
                break
            place(u, int(net.head[x]), int(net.head[net.next_around[x]]), +1.0)
        if not full:
            for j in range(n):
                x = darts[(i0 - 1 - j) % n]
                if face_of[x] == outer:
                    break
                place(u, int(net.head[net.next_around[x]]), int(net.head[x]), -1.0)

    if not placed.all():
        raise LayoutInconsistency(
            "layout did not reach every vertex", unplaced=int((~placed).sum())
        )
    if mismatch > tol:
        raise LayoutInconsistency(
            f"placement mismatch {mismatch:.3e} exceeds {tol:.1e}", mismatch=mismatch
        )

    if hyperbolic:
        center, radius = _to_euclidean(z, lab, is_int, placed_by)
    else:
        center, radius = z.copy(), lab.astype(float).copy()
        scale = 1.0 / float(np.max(np.abs(center) + radius))
        center, radius = center * scale, radius * scale

    packing = CirclePacking(
        mode=mode,
        center=np.column_stack([center.real, center.imag]),
        radius=radius,
        boundary=boundary,
        edges=np.column_stack([net.tail[net.edge_darts[:, 0]], net.head[net.edge_darts[:, 0]]]),
        angle_residual=radii.residual,
    )
    packing = replace(packing, tangency_residual=tangency_residual(packing))
    logger.bind(network=net.name, mode=mode.value).info(
        "layout done", mismatch=mismatch, tangency=packing.tangency_residual
    )
    return packing


def _to_euclidean(z, s, is_int, placed_by):
    center = np.empty_like(z)
    radius = np.empty(len(z))
    t = (1 - np.sqrt(s)) / (1 + np.sqrt(s))
    m = is_int
    a2 = np.abs(z[m]) ** 2
    t2 = t[m] ** 2
    center[m] = z[m] * (1 - t2) / (1 - t2 * a2)
    radius[m] = t[m] * (1 - a2) / (1 - t2 * a2)
    for b in np.flatnonzero(~m):
        zeta = z[b] / abs(z[b])
        u = placed_by[b]
        w = zeta - center[u]
        rho = (abs(w) ** 2 - radius[u] ** 2) / (2 * ((w * np.conj(zeta)).real + radius[u]))
        center[b] = (1 - rho) * zeta
        radius[b] = rho
    return center, radius


def _horocycle_triple(net: PlanarNetwork, radii: PackingRadii, boundary) -> CirclePacking:
    """No interior vertex: three mutually tangent horocycles at 120 degrees."""
    if len(boundary) != 3:
        raise LayoutInconsistency("hyperbolic layout needs an interior vertex")
    rho = np.sqrt(3.0) / (2.0 + np.sqrt(3.0))
    center = np.zeros(net.n_vertices, dtype=complex)
    radius = np.zeros(net.n_vertices)
    for i, v in enumerate(boundary):
        center[v] = (1 - rho) * np.exp(1j * TWO_PI * i / 3)
        radius[v] = rho
    p = CirclePacking(
        mode=radii.mode,
        center=np.column_stack([center.real, center.imag]),
        radius=radius,
        boundary=tuple(boundary),
        edges=np.column_stack([net.tail[net.edge_darts[:, 0]], net.head[net.edge_darts[:, 0]]]),
        angle_residual=radii.residual,
    )
    return replace(p, tangency_residual=tangency_residual(p))


# -------------------------------------------------------------------------
# 4. 检查 (checks)
# -------------------------------------------------------------------------
def tangency_residual(p: CirclePacking) -> float:
    if p.edges is None or len(p.edges) == 0:
        return 0.0
    u, v = p.edges[:, 0], p.edges[:, 1]
    dist = np.linalg.norm(p.center[u] - p.center[v], axis=1)
    return float(np.max(np.abs(dist - (p.radius[u] + p.radius[v]))))


def boundary_angles(p: CirclePacking) -> list[tuple[int, float]]:
    return [
        (int(v), float(np.mod(np.arctan2(p.center[v, 1], p.center[v, 0]), TWO_PI)))
        for v in p.boundary
    ]


def sum_of_squares_check(p: CirclePacking, tol: float = 1e-9) -> float:
    total = float(np.sum(p.radius**2))
    if total > 1.0 + tol:
        logger.warning("sum of squared radii exceeds 1", total=total)
    return total


def radius_ratio(p: CirclePacking, interior: np.ndarray) -> float | None:
    """Smallest interior radius over the largest outer radius; None without both."""
    outer = np.setdiff1d(np.arange(len(p.radius)), interior)
    if not len(interior) or not outer.size:
        return None
    return float(p.radius[interior].min() / p.radius[outer].max())


def packing_checks(net: PlanarNetwork, p: CirclePacking, tol: float = 1e-6) -> PackingReport:
    A = net.adjacency(weighted=False)
    A.data[:] = 1.0
    two = (A @ A).tocsr()
    two = (two - two.multiply(A)).tocsr()
    two.setdiag(0)
    two.eliminate_zeros()
    two = two.tocoo()
    keep = two.row < two.col
    u, w = two.row[keep], two.col[keep]
    gap = np.linalg.norm(p.center[u] - p.center[w], axis=1) - (p.radius[u] + p.radius[w])
    overlap = float(max(0.0, -gap.min(initial=0.0)))

    contain = float(max(0.0, np.max(np.linalg.norm(p.center, axis=1) + p.radius) - 1.0))
    e = p.edges
    energy = float(np.sum(np.linalg.norm(p.center[e[:, 0]] - p.center[e[:, 1]], axis=1) ** 2))
    sq = sum_of_squares_check(p)
    bound = 2.0 * float(net.degree.max()) * sq
    tang = tangency_residual(p)
    return PackingReport(
        tangency_residual=tang,
        overlap_violation=overlap,
        containment_violation=contain,
        sum_of_squares=sq,
        coordinate_energy=energy,
        coordinate_energy_bound=bound,
        passed=tang < tol and overlap < tol and contain < tol and sq <= 1 + tol
        and energy <= bound + tol,
    )


def align_by_rotation(p: CirclePacking, q: CirclePacking) -> float:
    """Rotate p onto q (least squares) and return the max centre distance."""
    zp, zq = p.z, q.z
    angle = np.angle(np.sum(zq * np.conj(zp)))
    return float(np.max(np.abs(zp * np.exp(1j * angle) - zq)))


def packing_to_document(p: CirclePacking) -> PackingDocument:
    return PackingDocument(
        mode=p.mode.value,
        boundary=list(p.boundary),
        circles=[
            CircleRecord(
                vertex=v,
                center_x=float(p.center[v, 0]),
                center_y=float(p.center[v, 1]),
                radius=float(p.radius[v]),
            )
            for v in range(len(p.radius))
        ],
        angle_residual=p.angle_residual,
        tangency_residual=p.tangency_residual,
    )


def packing_from_document(doc: PackingDocument) -> CirclePacking:
    circles = sorted(doc.circles, key=lambda c: c.vertex)
    return CirclePacking(
        mode=PackingMode(doc.mode),
        center=np.array([[c.center_x, c.center_y] for c in circles]),
        radius=np.array([c.radius for c in circles]),
        boundary=tuple(doc.boundary),
        angle_residual=doc.angle_residual,
        tangency_residual=doc.tangency_residual,
    )
