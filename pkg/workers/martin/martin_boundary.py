# -*- coding: utf-8 -*-
"""
Martin 核与边界比较 (Martin kernels, densities, tiling vs packing boundaries)

M_u(v) = P_v(hit u) / P_root(hit u), walks absorbed at B. Boundary points at
finite depth are represented by deep anchor columns, never extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from loguru import logger

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import (
    DegenerateDenominator,
    NoAnchor,
    OrderMismatch,
    UsageError,
)
from workers.network.generators import generate
from workers.network.planar_network import PlanarNetwork
from workers.packing.circle_packing import CirclePacking
from workers.pool import fan_out
from workers.potential.harmonic import green_expected_visits, hitting_probability, solve_escape
from workers.potential.solver import harmonic_residual
from workers.tiling.square_tiling import RectangleTiling, build_tiling
from workers.walks.walk_mc import ArcMeasure

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MartinTable:
    anchors: tuple[int, ...]
    columns: np.ndarray  # (V, len(anchors))
    root: int
    denominators: np.ndarray  # P_root(hit u)
    residual: float  # max harmonicity residual off {u} + B

    def column(self, u: int) -> np.ndarray:
        return self.columns[:, self.anchors.index(u)]


@dataclass(frozen=True)
class BoundaryCorrespondence:
    triples: tuple[tuple[int, float, float], ...]  # (vertex, theta, phi), sorted by theta
    sign: int  # +1 same orientation, -1 reflected
    offset: float  # phi of the first vertex in theta order
    modulus: float  # max ratio between normalized theta gaps and phi gaps


# -------------------------------------------------------------------------
# 1. Martin 列 (kernel columns)
# -------------------------------------------------------------------------
def _column(net: PlanarNetwork, u: int, tol: float | None) -> tuple[np.ndarray, float, float]:
    if u in net.absorbing:
        raise UsageError(f"anchor {u} lies in the absorbing set")
    hv = hitting_probability(net, {u}, net.absorbing, tol=tol)
    denom = hv[net.root]
    if denom < (tol or settings.SOLVER_TOL):
        raise DegenerateDenominator(f"P_root(hit {u}) = {denom:.3e}", anchor=u)
    m = hv.h / denom
    m[net.root] = 1.0
    res = harmonic_residual(net, m, {u, *net.absorbing})
    return m, denom, res


def martin_kernel(net: PlanarNetwork, u: int, tol: float | None = None) -> np.ndarray:
    m, _, _ = _column(net, u, tol)
    m.setflags(write=False)
    return m


def martin_table(
    net: PlanarNetwork, anchors: Sequence[int], tol: float | None = None
) -> MartinTable:
    cols = fan_out(lambda u: _column(net, int(u), tol), list(anchors))
    columns = np.column_stack([c[0] for c in cols]) if cols else np.zeros((net.n_vertices, 0))
    columns.setflags(write=False)
    table = MartinTable(
        anchors=tuple(int(u) for u in anchors),
        columns=columns,
        root=net.root,
        denominators=np.array([c[1] for c in cols]),
        residual=max((c[2] for c in cols), default=0.0),
    )
    logger.bind(network=net.name).info(
        "martin table", anchors=len(table.anchors), residual=table.residual
    )
    return table


def green_symmetry_defect(net: PlanarNetwork, u: int, v: int, tol: float | None = None) -> float:
    """|M_u(v) - c(root) G(u, v) / (c(v) G(u, root))| via reversibility."""
    c = net.vertex_conductance
    m = martin_kernel(net, u, tol)[v]
    g_uv = green_expected_visits(net, u, v, tol=tol)
    g_ur = green_expected_visits(net, u, net.root, tol=tol)
    return abs(m - c[net.root] * g_uv / (c[v] * g_ur))


# -------------------------------------------------------------------------
# 2. 锚点与收敛 (anchors and convergence across depth)
# -------------------------------------------------------------------------
def select_anchor(net: PlanarNetwork, tiling: RectangleTiling, theta: float) -> int:
    """Non-root vertex outside B whose interval contains theta; max y, then smallest id."""
    eta = tiling.eta
    start, length = tiling.interval_start, tiling.interval_length
    rel = np.mod(theta - np.nan_to_num(start), eta)
    cand = (length > 0) & ((rel < length) | (length >= eta))
    cand &= ~net.absorbing_mask
    cand[net.root] = False
    idx = np.flatnonzero(cand)
    if idx.size == 0:
        raise NoAnchor(f"no vertex interval contains theta={theta:.6g}", theta=theta)
    best = idx[tiling.y[idx] == tiling.y[idx].max()]
    return int(best.min())


@dataclass(frozen=True)
class MartinConvergence:
    theta0: float  # fraction of eta
    depths: tuple[int, ...]
    anchors: tuple[int, ...]
    window: tuple[int, ...]
    differences: tuple[float, ...]  # sup over window between consecutive depths

    @property
    def decreasing(self) -> bool:
        d = self.differences
        return all(b < a for a, b in zip(d, d[1:]))


def martin_convergence_check(
    theta0: float,
    depths: Iterable[int],
    *,
    family: str = "hyp7",
    window_radius: int = 2,
    tol: float | None = None,
) -> MartinConvergence:
    """theta0 is a fraction of eta; vertex ids are shared across depths."""
    depths = tuple(sorted(int(r) for r in depths))
    if len(depths) < 2:
        raise UsageError("martin_convergence_check needs at least two depths")
    cols, anchors = [], []
    window = None
    for r in depths:
        net = generate(family, r)
        tiling = build_tiling(net, solve_escape(net, tol), tol=tol)
        u = select_anchor(net, tiling, theta0 * tiling.eta)
        if window is None:
            window = net.ball(net.root, window_radius)
        anchors.append(u)
        cols.append(martin_kernel(net, u, tol)[window])
    diffs = tuple(float(np.max(np.abs(a - b))) for a, b in zip(cols, cols[1:]))
    logger.info("martin convergence", theta0=theta0, anchors=anchors, differences=diffs)
    return MartinConvergence(
        theta0=theta0,
        depths=depths,
        anchors=tuple(anchors),
        window=tuple(int(v) for v in window),
        differences=diffs,
    )


def anchor_separation(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    thetas: Sequence[float],
    *,
    window_radius: int = 2,
) -> tuple[tuple[int, ...], np.ndarray]:
    """Pairwise sup-differences over the window between same-depth anchor columns."""
    anchors = [select_anchor(net, tiling, t * tiling.eta) for t in thetas]
    window = net.ball(net.root, window_radius)
    table = martin_table(net, anchors)
    w = table.columns[window]
    sep = np.max(np.abs(w[:, :, None] - w[:, None, :]), axis=0)
    return tuple(anchors), sep


@dataclass(frozen=True)
class DensityReport:
    vertex: int
    arcs: tuple[tuple[float, float], ...]
    densities: np.ndarray  # omega_v(A) / (lambda(A) / eta)
    martin: np.ndarray  # M_{u(A)}(v)
    anchors: tuple[int, ...]

    @property
    def max_difference(self) -> float:
        return float(np.max(np.abs(self.densities - self.martin)))


def harmonic_density(
    net: PlanarNetwork, tiling: RectangleTiling, v: int, k: int, tol: float | None = None
) -> DensityReport:
    if k < 2:
        raise UsageError("harmonic_density needs at least two arcs")
    eta = tiling.eta
    measure = ArcMeasure(net, tiling, tol=tol)
    arcs = tuple((j * eta / k, (j + 1) * eta / k) for j in range(k))
    dens = np.array([measure.at(a, v) * k for a in arcs])
    anchors = tuple(select_anchor(net, tiling, (a + b) / 2) for a, b in arcs)
    table = martin_table(net, sorted(set(anchors)), tol)
    mart = np.array([table.column(u)[v] for u in anchors])
    return DensityReport(v, arcs, dens, mart, anchors)


# -------------------------------------------------------------------------
# 3. 边界比较 (tiling vs packing boundary order)
# -------------------------------------------------------------------------
def _orient(pos: Mapping[int, int], n: int, x: int, y: int, z: int) -> int:
    return 1 if (pos[y] - pos[x]) % n < (pos[z] - pos[x]) % n else -1


def _theta_order(
    theta: Mapping[int, float], rank: Mapping[int, int], tie_tol: float
) -> list[int]:
    """
    Sort by theta; runs of equal theta (zero-length intervals sharing a point)
    follow the combinatorial cycle ``rank``, walked in the direction the
    untied theta order takes around it.
    """
    base = sorted(theta, key=lambda v: (theta[v], rank[v]))
    n = len(base)
    pairs = [
        (a, b)
        for a, b in zip(base, base[1:] + base[:1])
        if abs(theta[b] - theta[a]) > tie_tol
    ]
    forward = sum((rank[b] - rank[a]) % n <= n // 2 for a, b in pairs)
    d = 1 if 2 * forward >= len(pairs) else -1
    out: list[int] = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and theta[base[j + 1]] - theta[base[i]] <= tie_tol:
            j += 1
        run = base[i : j + 1]
        if len(run) > 1:
            prev = rank[out[-1] if out else base[-1]]
            run.sort(key=lambda v: (d * (rank[v] - prev)) % n)
        out += run
        i = j + 1
    return out


def compare_cyclic_orders(
    theta_by_vertex: Mapping[int, float],
    phi_by_vertex: Mapping[int, float],
    rank: Mapping[int, int] | None = None,
    *,
    tie_tol: float = 1e-12,
) -> tuple[list[int], int]:
    """
    Cyclic order by theta against cyclic order by phi, up to rotation and
    reflection. Returns (theta order, sign); raises OrderMismatch with the
    first triple (in theta order) whose orientation disagrees. Ties in theta
    are broken by ``rank`` (position on the outer cycle), else by vertex id.
    """
    verts = sorted(theta_by_vertex)
    if set(verts) != set(phi_by_vertex):
        raise UsageError("theta and phi must cover the same vertices")
    if rank is None:
        a = sorted(verts, key=lambda v: (theta_by_vertex[v], v))
    else:
        a = _theta_order(theta_by_vertex, rank, tie_tol)
    b = sorted(verts, key=lambda v: (phi_by_vertex[v], v))
    n = len(a)
    if n <= 3:
        sign = 1 if n < 3 else _orient({v: i for i, v in enumerate(b)}, n, *a)
        return a, sign
    pos = {v: i for i, v in enumerate(b)}
    sign = _orient(pos, n, a[0], a[1], a[2])
    for i in range(n):
        t = (a[i], a[(i + 1) % n], a[(i + 2) % n])
        if _orient(pos, n, *t) != sign:
            raise OrderMismatch(f"cyclic orders disagree at {t}", triple=t)
    steps = {(pos[a[(i + 1) % n]] - pos[a[i]]) % n for i in range(n)}
    if steps != {1 if sign > 0 else n - 1}:
        # consistent locally but winding more than once
        for i in range(1, n):
            for j in range(i + 1, n):
                if _orient(pos, n, a[0], a[i], a[j]) != sign:
                    t = (a[0], a[i], a[j])
                    raise OrderMismatch(f"cyclic orders disagree at {t}", triple=t)
    return a, sign


def compare_boundaries(
    net: PlanarNetwork, tiling: RectangleTiling, packing: CirclePacking
) -> BoundaryCorrespondence:
    verts = [v for v in packing.boundary if v in net.absorbing]
    theta = {v: float(tiling.theta_rep[v]) for v in verts}
    phi = {
        v: float(np.mod(np.arctan2(packing.center[v, 1], packing.center[v, 0]), TWO_PI))
        for v in verts
    }
    rank = {v: i for i, v in enumerate(verts)}
    order, sign = compare_cyclic_orders(theta, phi, rank)

    offset = phi[order[0]]
    t = np.array([theta[v] for v in order]) / tiling.eta
    p = np.array([np.mod(sign * (phi[v] - offset), TWO_PI) for v in order]) / TWO_PI
    gt = np.diff(np.append(t, t[0] + 1.0))
    gp = np.diff(np.append(p, 1.0))
    ok = (gt > 0) & (gp > 0)
    modulus = float(np.max(np.maximum(gt[ok] / gp[ok], gp[ok] / gt[ok]))) if ok.any() else 1.0
    logger.bind(network=net.name).info(
        "boundary orders match", vertices=len(order), sign=sign, modulus=modulus
    )
    return BoundaryCorrespondence(
        triples=tuple((v, theta[v], phi[v]) for v in order),
        sign=sign,
        offset=offset,
        modulus=modulus,
    )

