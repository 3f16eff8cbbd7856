# -*- coding: utf-8 -*-
"""
粗等距 (rough isometries, energy and conductance comparison)

phi: V(G) -> V(G') is an (alpha, beta) rough isometry when
    d(u,v)/alpha - beta <= d'(phi u, phi v) <= alpha d(u,v) + beta
and every vertex of G' is within beta of phi(V). Each edge e = (u,v) of G gets a
BFS path Phi(e) from phi(u) to phi(v) in G'; the energy constant is
C = C1 C2 C3 with
    C1 = (alpha + beta) max c(G),
    C2 = max number of G edges meeting a ball of radius alpha (2 alpha + 3 beta),
    C3 = 1 / min c(G').
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from loguru import logger

from services.atlas.app.core.exceptions import UsageError
from services.atlas.app.schemas.graph import GraphDocument
from workers.network.planar_network import (
    TRIANGULATION,
    PlanarNetwork,
    build_network,
    network_to_document,
)
from workers.pool import fan_out
from workers.potential.harmonic import dirichlet_energy, effective_conductance, hitting_probability


@dataclass(frozen=True, eq=False)
class RoughIsometry:
    source: PlanarNetwork
    target: PlanarNetwork
    phi: np.ndarray
    alpha: float
    beta: float
    paths: tuple[tuple[int, ...], ...]  # Phi, indexed by edge id of source


@dataclass(frozen=True)
class RoughReport:
    passed: bool
    distance_witness: tuple[int, int, int, int] | None  # (u, v, d, d')
    surjectivity_witness: int | None  # vertex of G' farther than beta from phi(V)
    path_witness: int | None  # edge whose Phi path is too long or broken
    max_path_length: int


# -------------------------------------------------------------------------
# 1. Phi 路径与校验 (path table, verification)
# -------------------------------------------------------------------------
def _bfs_path(net: PlanarNetwork, a: int, b: int) -> tuple[int, ...]:
    """Shortest path; neighbours scanned in increasing id order."""
    prev = {a: a}
    queue = deque([a])
    while queue and b not in prev:
        v = queue.popleft()
        for u in sorted(set(net.neighbors(v))):
            if u not in prev:
                prev[u] = v
                queue.append(u)
    out = [b]
    while out[-1] != a:
        out.append(prev[out[-1]])
    return tuple(out[::-1])


def path_table(
    G: PlanarNetwork, Gp: PlanarNetwork, phi: np.ndarray
) -> tuple[tuple[int, ...], ...]:
    canon = G.edge_darts[:, 0]
    return tuple(_bfs_path(Gp, int(phi[G.tail[d]]), int(phi[G.head[d]])) for d in canon)


def verify_rough_isometry(
    G: PlanarNetwork,
    Gp: PlanarNetwork,
    phi: Sequence[int] | np.ndarray,
    alpha: float,
    beta: float,
    paths: Sequence[Sequence[int]] | None = None,
) -> RoughReport:
    phi = np.asarray(phi, dtype=np.int64)
    if phi.shape != (G.n_vertices,):
        raise UsageError("phi must map every vertex of G")
    D = G.distance_matrix
    Dp = Gp.distance_matrix[np.ix_(phi, phi)]

    bad = (Dp < D / alpha - beta - 1e-12) | (Dp > alpha * D + beta + 1e-12)
    dist_w = None
    if bad.any():
        u, v = map(int, np.argwhere(bad)[0])
        dist_w = (u, v, int(D[u, v]), int(Dp[u, v]))

    reach = Gp.distance_matrix[phi].min(axis=0)
    far = np.flatnonzero(reach > beta)
    surj_w = int(far[0]) if far.size else None

    path_w, longest = None, 0
    if paths is not None:
        adj = Gp.adjacency(weighted=False)
        canon = G.edge_darts[:, 0]
        for k, p in enumerate(paths):
            longest = max(longest, len(p) - 1)
            ends_ok = p[0] == phi[G.tail[canon[k]]] and p[-1] == phi[G.head[canon[k]]]
            steps_ok = all(adj[a, b] > 0 for a, b in zip(p, p[1:]))
            if path_w is None and (len(p) - 1 > alpha + beta or not ends_ok or not steps_ok):
                path_w = k

    passed = dist_w is None and surj_w is None and path_w is None
    (logger.debug if passed else logger.warning)(
        "rough isometry verified", passed=passed, alpha=alpha, beta=beta
    )
    return RoughReport(passed, dist_w, surj_w, path_w, longest)


# -------------------------------------------------------------------------
# 2. 装饰 (decorations with certified constants)
# -------------------------------------------------------------------------
def _certify(G: PlanarNetwork, Gp: PlanarNetwork, phi, alpha, beta) -> RoughIsometry:
    phi = np.asarray(phi, dtype=np.int64)
    phi.setflags(write=False)
    return RoughIsometry(G, Gp, phi, float(alpha), float(beta), path_table(G, Gp, phi))


def identity_isometry(net: PlanarNetwork) -> RoughIsometry:
    return _certify(net, net, np.arange(net.n_vertices), 1, 0)


def subdivide(net: PlanarNetwork) -> tuple[PlanarNetwork, RoughIsometry]:
    """Split every edge once: darts at old vertices keep their ids."""
    V, D = net.n_vertices, net.n_darts
    doc = network_to_document(net)
    rotations = [list(r) for r in doc.rotations]
    darts, cond = [], []
    for k, (d0, d1) in enumerate(net.edge_darts.tolist()):
        rotations.append([D + 2 * k, D + 2 * k + 1])
        darts += [(d0, D + 2 * k), (d1, D + 2 * k + 1)]
        cond += [float(net.conductance[k])] * 2
    new = build_network(
        GraphDocument(
            name=f"subdivide({net.name})",
            vertices=V + net.n_edges,
            darts=darts,
            rotations=rotations,
            conductances=cond,
            root=net.root,
            absorbing=sorted(net.absorbing),
            outer_dart=net.outer_dart,
            flags=[f for f in doc.flags if f != TRIANGULATION],
        )
    )
    return new, _certify(net, new, np.arange(V), 2, 1)


def pendant(net: PlanarNetwork, length: int) -> tuple[PlanarNetwork, RoughIsometry]:
    """Hang a path of ``length`` unit edges from every vertex."""
    if length < 0:
        raise UsageError("pendant length must be >= 0")
    if length == 0:
        return net, identity_isometry(net)
    V, D = net.n_vertices, net.n_darts
    doc = network_to_document(net)
    rotations = [list(r) for r in doc.rotations]
    darts = list(doc.darts)
    cond = list(doc.conductances)
    j = 0
    for v in range(V):
        prev = v
        for i in range(length):
            d_out, d_in = D + 2 * j, D + 2 * j + 1
            j += 1
            darts.append((d_out, d_in))
            cond.append(1.0)
            rotations[prev].append(d_out)
            rotations.append([d_in])
            prev = V + v * length + i
    new = build_network(
        GraphDocument(
            name=f"pendant({net.name},{length})",
            vertices=V * (1 + length),
            darts=darts,
            rotations=rotations,
            conductances=cond,
            root=net.root,
            absorbing=sorted(net.absorbing),
            outer_dart=net.outer_dart,
            flags=[f for f in doc.flags if f != TRIANGULATION],
        )
    )
    return new, _certify(net, new, np.arange(V), 1, length)


_SCHEME_RE = re.compile(r"^\s*(subdivide|pendant|identity)\s*(?:\(\s*(\d*)\s*\))?\s*$")


def decorate(net: PlanarNetwork, scheme: str) -> tuple[PlanarNetwork, RoughIsometry]:
    """scheme: 'subdivide', 'pendant(len)' or 'identity'."""
    m = _SCHEME_RE.match(scheme)
    if not m:
        raise UsageError(f"unknown decoration {scheme!r}")
    name, arg = m.group(1), m.group(2)
    if name == "subdivide":
        new, ri = subdivide(net)
    elif name == "pendant":
        new, ri = pendant(net, int(arg or 1))
    else:
        new, ri = net, identity_isometry(net)
    report = verify_rough_isometry(ri.source, ri.target, ri.phi, ri.alpha, ri.beta, ri.paths)
    if not report.passed:
        raise UsageError(
            f"decoration {scheme!r} failed certification",
            distance_witness=report.distance_witness,
            surjectivity_witness=report.surjectivity_witness,
            path_witness=report.path_witness,
        )
    return new, ri


# -------------------------------------------------------------------------
# 3. 常数与负载 (constants, edge load)
# -------------------------------------------------------------------------
def energy_constants(ri: RoughIsometry) -> tuple[float, float, float]:
    G = ri.source
    C1 = (ri.alpha + ri.beta) * float(G.conductance.max())
    radius = ri.alpha * (2 * ri.alpha + 3 * ri.beta)
    D = G.distance_matrix
    canon = G.edge_darts[:, 0]
    t, h = G.tail[canon], G.head[canon]
    near = D <= radius
    C2 = float(np.max((near[:, t] | near[:, h]).sum(axis=1)))
    C3 = 1.0 / float(ri.target.conductance.min())
    return C1, C2, C3


def energy_constant(ri: RoughIsometry) -> float:
    C1, C2, C3 = energy_constants(ri)
    return C1 * C2 * C3


def edge_load(ri: RoughIsometry) -> int:
    """Max number of Phi paths through one edge of G'."""
    Gp = ri.target
    canon = Gp.edge_darts[:, 0]
    key = {}
    for k, (a, b) in enumerate(zip(Gp.tail[canon].tolist(), Gp.head[canon].tolist())):
        key.setdefault((min(a, b), max(a, b)), k)
    load = np.zeros(Gp.n_edges, dtype=np.int64)
    for p in ri.paths:
        for e in {key[(min(a, b), max(a, b))] for a, b in zip(p, p[1:])}:
            load[e] += 1
    return int(load.max(initial=0))


# -------------------------------------------------------------------------
# 4. 能量 / 电导 / 击中 比较 (comparison checks)
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class Comparison:
    lhs: float
    rhs: float
    constant: float
    passed: bool


def energy_pullback_check(ri: RoughIsometry, f: Sequence[float] | np.ndarray) -> Comparison:
    """E_G(f o phi) <= C E_G'(f)."""
    f = np.asarray(f, dtype=float)
    lhs = dirichlet_energy(ri.source, f[ri.phi])
    rhs = dirichlet_energy(ri.target, f)
    C = energy_constant(ri)
    return Comparison(lhs, rhs, C, lhs <= C * rhs * (1 + 1e-12) + 1e-12)


def conductance_comparison_check(
    ri: RoughIsometry, A: Iterable[int], Z: Iterable[int], tol: float | None = None
) -> Comparison:
    A, Z = set(map(int, A)), set(map(int, Z))
    if A & Z:
        raise UsageError("A and Z must be disjoint")
    pA, pZ = {int(ri.phi[a]) for a in A}, {int(ri.phi[z]) for z in Z}
    if pA & pZ:
        raise UsageError("phi(A) and phi(Z) must be disjoint")
    lhs = effective_conductance(ri.source, A, Z, tol=tol)
    rhs = effective_conductance(ri.target, pA, pZ, tol=tol)
    C = energy_constant(ri)
    return Comparison(lhs, rhs, C, lhs <= C * rhs * (1 + 1e-9) + 1e-12)


def hitting_bound_check(
    net: PlanarNetwork, v0: int, target: Iterable[int], tol: float | None = None
) -> Comparison:
    """P_v0(hit target before B) <= C(v0 <-> target) / C(v0 <-> B)."""
    target = set(map(int, target))
    if v0 in target:
        raise UsageError("target must not contain the start vertex")
    if v0 in net.absorbing:
        raise UsageError(f"start vertex {v0} is absorbing")
    stop = net.absorbing - target
    lhs = 1.0 if not stop else hitting_probability(net, target, stop, tol=tol)[v0]
    rhs = effective_conductance(net, {v0}, target, tol=tol) / effective_conductance(
        net, {v0}, net.absorbing, tol=tol
    )
    return Comparison(lhs, rhs, 1.0, lhs <= rhs + 1e-9)


# -------------------------------------------------------------------------
# 5. 随机试验 (seeded random trials)
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class TrialsReport:
    energy: tuple[Comparison, ...]
    conductance: tuple[Comparison, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.energy + self.conductance)


def _rng(seed: int, i: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([i, seed], dtype=np.uint64)))


def random_trials(ri: RoughIsometry, n: int, seed: int) -> TrialsReport:
    G = ri.source

    def one(i: int) -> tuple[Comparison, Comparison]:
        rng = _rng(seed, i)
        f = rng.normal(size=ri.target.n_vertices)
        order = rng.permutation(G.n_vertices)
        a = int(order[0])
        z = order[1 : 2 + int(rng.integers(3))]
        return energy_pullback_check(ri, f), conductance_comparison_check(ri, {a}, z.tolist())

    results = fan_out(one, range(n))
    report = TrialsReport(tuple(r[0] for r in results), tuple(r[1] for r in results))
    logger.bind(network=G.name).info("rough trials", n=n, seed=seed, passed=report.passed)
    return report


def random_hitting_trials(
    net: PlanarNetwork, n: int, seed: int, v0: int | None = None
) -> tuple[Comparison, ...]:
    v0 = net.root if v0 is None else v0
    others = np.array([v for v in range(net.n_vertices) if v != v0])

    def one(i: int) -> Comparison:
        rng = _rng(seed, i)
        size = 1 + int(rng.integers(5))
        return hitting_bound_check(net, v0, rng.choice(others, size, replace=False).tolist())

    return tuple(fan_out(one, range(n)))
