# -*- coding: utf-8 -*-
"""
随机游走蒙特卡罗 (seeded walks, exit measures, arc measures, Q_k experiments)

Each walk index owns an independent Philox stream keyed by (index, seed), so
histograms are bit-identical for any thread count. Walks from the root that
must never return to it use the Doob transform by the escape function y:
p(u, v) = c(u, v) y(v) / (c(u) y(u)).
"""

from __future__ import annotations

from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
from loguru import logger
from scipy import sparse, stats

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import (
    NumericalError,
    StartAbsorbing,
    StepCap,
    UsageError,
    WalkTooShort,
)
from workers.network.planar_network import PlanarNetwork
from workers.pool import fan_out
from workers.potential.harmonic import hitting_probability
from workers.potential.solver import DirichletProblem
from workers.tiling.square_tiling import RectangleTiling, arc_overlap

WalkMode = Literal["doob", "restart"]


@dataclass(frozen=True)
class WalkTrace:
    start: int
    seed: int
    index: int
    path: tuple[int, ...]
    exit_dart: int  # dart of the last step, -1 for an empty walk
    exit_theta: float | None = None  # theta_rep of the exit vertex

    @property
    def exit_vertex(self) -> int:
        return self.path[-1]

    @property
    def steps(self) -> int:
        return len(self.path) - 1


@dataclass(frozen=True)
class ExitHistogram:
    boundary: np.ndarray
    counts: np.ndarray  # aligned with boundary
    edge_counts: np.ndarray  # per edge id
    side_counts: np.ndarray  # per vertex: last vertex before the exit
    total: int
    reference: np.ndarray  # length(I(b)) / eta, aligned with boundary
    mode: str
    seed: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.frequencies - self.reference)))

    def as_dict(self) -> dict[int, int]:
        return {int(b): int(c) for b, c in zip(self.boundary, self.counts)}


# -------------------------------------------------------------------------
# 1. 转移核与单次游走 (kernels and single walks)
# -------------------------------------------------------------------------
class _Kernel:
    """Per-vertex cumulative transition tables over darts with positive weight."""

    def __init__(self, net: PlanarNetwork, weight: np.ndarray):
        self.head = net.head.tolist()
        self.darts: list[list[int]] = []
        self.cum: list[list[float]] = []
        for v in range(net.n_vertices):
            ds = np.asarray(net.darts_at(v), dtype=np.int64)
            w = weight[ds]
            keep = w > 0
            if not keep.any():
                self.darts.append([])
                self.cum.append([])
                continue
            c = np.cumsum(w[keep])
            c /= c[-1]
            c[-1] = 1.0
            self.darts.append(ds[keep].tolist())
            self.cum.append(c.tolist())

    @classmethod
    def plain(cls, net: PlanarNetwork) -> "_Kernel":
        return cls(net, net.dart_conductance)

    @classmethod
    def doob(cls, net: PlanarNetwork, y: np.ndarray) -> "_Kernel":
        return cls(net, net.dart_conductance * np.asarray(y)[net.head])


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([index, seed], dtype=np.uint64)))


def _walk(
    kernel: _Kernel,
    start: int,
    stop: list[bool],
    rng: np.random.Generator,
    step_cap: int,
) -> tuple[list[int], int]:
    path, v, last = [start], start, -1
    buf: list[float] = []
    while True:
        if not buf:
            buf = rng.random(settings.WALK_BATCH).tolist()
            buf.reverse()
        cum = kernel.cum[v]
        if not cum:
            raise NumericalError(f"walk stuck at vertex {v}: no positive transition")
        last = kernel.darts[v][min(bisect_right(cum, buf.pop()), len(cum) - 1)]
        v = kernel.head[last]
        path.append(v)
        if stop[v]:
            return path, last
        if len(path) > step_cap:
            raise StepCap(f"walk exceeded {step_cap} steps", start=start)


def run_walk(
    net: PlanarNetwork,
    start: int,
    seed: int,
    absorb_at_root: bool = False,
    *,
    index: int = 0,
    tiling: RectangleTiling | None = None,
    step_cap: int | None = None,
) -> WalkTrace:
    """Plain walk p(u,v) = c(u,v)/c(u) from start until it enters B (or the root)."""
    if start in net.absorbing:
        raise StartAbsorbing(f"start vertex {start} is absorbing")
    stop = net.absorbing_mask.tolist()
    if absorb_at_root:
        stop[net.root] = True
    path, last = _walk(
        _Kernel.plain(net), start, stop, _stream(seed, index), step_cap or settings.WALK_STEP_CAP
    )
    return _trace(start, seed, index, path, last, tiling)


def _trace(start, seed, index, path, last, tiling) -> WalkTrace:
    theta = None if tiling is None else float(tiling.theta_rep[path[-1]])
    return WalkTrace(
        start=start, seed=seed, index=index, path=tuple(path), exit_dart=last, exit_theta=theta
    )


def _root_excursion(
    net: PlanarNetwork,
    kernel: _Kernel,
    mode: WalkMode,
    seed: int,
    index: int,
    tiling: RectangleTiling | None,
    step_cap: int,
) -> WalkTrace:
    """Walk from the root conditioned never to come back to it."""
    rng = _stream(seed, index)
    stop = net.absorbing_mask.tolist()
    if mode == "doob":
        path, last = _walk(kernel, net.root, stop, rng, step_cap)
        return _trace(net.root, seed, index, path, last, tiling)
    stop[net.root] = True
    budget = step_cap
    while True:
        path, last = _walk(kernel, net.root, stop, rng, budget)
        if path[-1] != net.root:
            return _trace(net.root, seed, index, path, last, tiling)
        budget -= len(path) - 1
        if budget <= 0:
            raise StepCap(f"restart walk exceeded {step_cap} steps", index=index)


def _excursion_kernel(net: PlanarNetwork, tiling: RectangleTiling, mode: WalkMode) -> _Kernel:
    if mode == "doob":
        return _Kernel.doob(net, tiling.y)
    if mode == "restart":
        return _Kernel.plain(net)
    raise UsageError(f"unknown walk mode {mode!r}")


def sample_traces(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    N: int,
    seed: int,
    *,
    mode: WalkMode = "doob",
    stride: int = 1,
    offset: int = 0,
    step_cap: int | None = None,
) -> list[WalkTrace]:
    """Root excursions for stream indices offset, offset+stride, ... (N of them)."""
    kernel = _excursion_kernel(net, tiling, mode)
    cap = step_cap or settings.WALK_STEP_CAP
    indices = [offset + stride * i for i in range(N)]
    return fan_out(
        lambda i: _root_excursion(net, kernel, mode, seed, i, tiling, cap), indices
    )


# -------------------------------------------------------------------------
# 2. 出口分布 (exit_measure)
# -------------------------------------------------------------------------
def exit_measure(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    N: int,
    seed: int,
    *,
    mode: WalkMode = "doob",
    step_cap: int | None = None,
) -> ExitHistogram:
    if N < 1:
        raise UsageError("exit_measure needs N >= 1")
    traces = sample_traces(net, tiling, N, seed, mode=mode, step_cap=step_cap)
    B = net.boundary
    exits = np.array([t.exit_vertex for t in traces])
    edges = np.array([net.edge_of[t.exit_dart] for t in traces])
    sides = np.array([t.path[-2] for t in traces])

    pos = np.searchsorted(B, exits)
    hist = ExitHistogram(
        boundary=B,
        counts=np.bincount(pos, minlength=B.size),
        edge_counts=np.bincount(edges, minlength=net.n_edges),
        side_counts=np.bincount(sides, minlength=net.n_vertices),
        total=N,
        reference=tiling.interval_length[B] / tiling.eta,
        mode=mode,
        seed=seed,
    )
    logger.bind(network=net.name).info(
        "exit measure sampled", N=N, seed=seed, mode=mode, max_deviation=hist.max_deviation
    )
    return hist


# -------------------------------------------------------------------------
# 3. 弧调和测度 (arc harmonic measure, exact)
# -------------------------------------------------------------------------
class ArcMeasure:
    """
    q_(t1,t2)(v) = P_v(exit position in the arc), solved exactly.

    The exit position is refined by exit edge: entering b along edge e lands
    uniformly in the rectangle of e, so e contributes the overlap fraction of
    its rectangle with the arc. With ``conditioned`` the walk is the Doob
    transform by y (never returns to the root).

    Boundary convention: a walk started at b in B has no exit edge, so q(b) is
    the overlap fraction of I(b) with the arc (the flow-weighted mean of the
    fractions of the edges entering b). The mean-value property at a free
    vertex uses the fraction of each exit edge, see ``exit_fractions``, not
    q(b); q is therefore not harmonic next to a b whose interval straddles an
    arc end.
    """

    def __init__(
        self,
        net: PlanarNetwork,
        tiling: RectangleTiling,
        *,
        conditioned: bool = False,
        tol: float | None = None,
    ):
        self.net, self.tiling, self.conditioned = net, tiling, conditioned
        fixed = net.boundary.tolist() + ([net.root] if conditioned else [])
        self.problem = DirichletProblem(net, fixed, tol=tol)

        canon = net.edge_darts[:, 0]
        t, h = net.tail[canon], net.head[canon]
        in_b = net.absorbing_mask
        exit_edges = np.flatnonzero(in_b[t] ^ in_b[h])
        inner = np.where(in_b[t[exit_edges]], h[exit_edges], t[exit_edges])
        row_of = np.full(net.n_vertices, -1)
        row_of[self.problem.free] = np.arange(self.problem.free.size)
        keep = row_of[inner] >= 0
        self.exit_edges, self._inner = exit_edges, inner
        self.R = sparse.csr_matrix(
            (net.conductance[exit_edges[keep]], (row_of[inner[keep]], np.flatnonzero(keep))),
            shape=(self.problem.free.size, exit_edges.size),
        )
        a, w, _, _ = tiling.rect_arrays()
        self._a, self._w = a[exit_edges], w[exit_edges]

    def _arc(self, arc: tuple[float, float]) -> tuple[float, float]:
        eta = self.tiling.eta
        t1, t2 = float(arc[0]), float(arc[1])
        length = t2 - t1
        if not 0.0 < length <= eta:
            length = float(np.mod(length, eta))
        if length <= 0.0:
            raise UsageError(f"degenerate arc {arc!r}")
        return float(np.mod(t1, eta)), length

    def exit_fractions(self, arc: tuple[float, float]) -> np.ndarray:
        """Per exit edge (aligned with ``exit_edges``): share of its rectangle in the arc."""
        s, length = self._arc(arc)
        ov = arc_overlap(self._a, self._w, s, length, self.tiling.eta)
        return np.divide(ov, self._w, out=np.zeros_like(ov), where=self._w > 0)

    def vector(self, arc: tuple[float, float]) -> np.ndarray:
        net, t = self.net, self.tiling
        s, length = self._arc(arc)
        eta = t.eta
        frac = self.exit_fractions(arc)

        values = np.zeros(net.n_vertices)
        h = self.problem.solve(values, rhs=self.R @ frac)

        B = net.boundary
        ib = arc_overlap(t.interval_start[B], t.interval_length[B], s, length, eta)
        lengths = t.interval_length[B]
        h[B] = np.divide(ib, lengths, out=np.zeros_like(ib), where=lengths > 0)
        if not self.conditioned:
            return h

        q = h.copy()
        free = self.problem.free
        q[free] = h[free] / t.y[free]
        darts = list(net.darts_at(net.root))
        heads = net.head[darts]
        inside = ~net.absorbing_mask[heads]
        mass = np.sum(net.dart_conductance[darts][inside] * h[heads[inside]])
        direct = self._inner == net.root
        mass += np.sum(net.conductance[self.exit_edges[direct]] * frac[direct])
        q[net.root] = float(mass) / t.eta
        return q

    def at(self, arc: tuple[float, float], v: int) -> float:
        return float(self.vector(arc)[v])


def arc_harmonic_vector(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    arc: tuple[float, float],
    *,
    conditioned: bool = False,
    tol: float | None = None,
) -> np.ndarray:
    return ArcMeasure(net, tiling, conditioned=conditioned, tol=tol).vector(arc)


def arc_harmonic_measure(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    arc: tuple[float, float],
    v: int,
    *,
    tol: float | None = None,
) -> float:
    return float(arc_harmonic_vector(net, tiling, arc, tol=tol)[v])


# -------------------------------------------------------------------------
# 4. Q_k 均匀性 (Q_k experiment)
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class QkSample:
    index: int
    x_k: int
    theta_plus: float  # limit of X
    theta_minus: float  # limit of Y
    q: float
    x: WalkTrace
    y: WalkTrace


@dataclass(frozen=True)
class QkResult:
    k: int
    samples: tuple[QkSample, ...]
    too_short: int
    tied: int
    statistic: float
    pvalue: float

    @property
    def values(self) -> np.ndarray:
        return np.array([s.q for s in self.samples])


def _exit_position(
    tiling: RectangleTiling, net: PlanarNetwork, trace: WalkTrace, u: float
) -> float:
    r = tiling.rects[int(net.edge_of[trace.exit_dart])]
    return float(np.mod(r.theta_start + u * r.width, tiling.eta))


def _qk_triples(net, tiling, N, seed, step_cap):
    xs = sample_traces(net, tiling, N, seed, stride=3, offset=0, step_cap=step_cap)
    ys = sample_traces(net, tiling, N, seed, stride=3, offset=1, step_cap=step_cap)
    out = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        u = _stream(seed, 3 * i + 2).random(2)
        tp = _exit_position(tiling, net, x, u[0])
        tm = _exit_position(tiling, net, y, u[1])
        out.append((i, x, y, tp, tm))
    return out


def qk_experiment(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    K: int,
    N: int,
    seed: int,
    *,
    step_cap: int | None = None,
    tol: float = 1e-12,
) -> QkResult:
    """
    X, Y: independent root excursions; theta+ / theta- their exit positions.
    Q_k = P(conditioned walk from X_k exits in the counterclockwise arc
    (theta-, theta+)). Samples whose X ends by step K are skipped.
    """
    if K < 0 or N < 1:
        raise UsageError("qk_experiment needs K >= 0 and N >= 1")
    measure = ArcMeasure(net, tiling, conditioned=True)
    samples: list[QkSample] = []
    short = tied = 0
    for i, x, y, tp, tm in _qk_triples(net, tiling, N, seed, step_cap):
        if x.steps <= K:
            short += 1
            continue
        if abs(tp - tm) <= tol:
            tied += 1
            continue
        xk = x.path[K]
        samples.append(QkSample(i, xk, tp, tm, measure.at((tm, tp), xk), x, y))

    if not samples:
        raise WalkTooShort(
            f"every X excursion ended by step {K}", k=K, too_short=short, tied=tied
        )
    ks = stats.kstest([s.q for s in samples], "uniform")
    stat, pvalue = float(ks.statistic), float(ks.pvalue)
    logger.bind(network=net.name).info(
        "Q_k sampled", k=K, kept=len(samples), too_short=short, tied=tied, ks=stat
    )
    return QkResult(K, tuple(samples), short, tied, stat, pvalue)


# -------------------------------------------------------------------------
# 5. 路径击中 (path hitting and the disconnection inequality)
# -------------------------------------------------------------------------
def path_hitting_probability(
    net: PlanarNetwork, pathset: Iterable[int], start: int, tol: float | None = None
) -> float:
    """P_start(hit pathset before the rest of B)."""
    target = frozenset(int(v) for v in pathset)
    if start in target:
        return 1.0
    stop = net.absorbing - target
    if not stop:
        return 1.0
    return hitting_probability(net, target, stop, tol=tol)[start]


def geodesic(net: PlanarNetwork, source: int, target: int) -> list[int]:
    """BFS shortest path, neighbours explored in rotation order."""
    prev = {source: source}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if v == target:
            break
        for u in net.neighbors(v):
            if u not in prev:
                prev[u] = v
                queue.append(u)
    path = [target]
    while path[-1] != source:
        path.append(prev[path[-1]])
    return path[::-1]


@dataclass(frozen=True)
class Poisson2Sample:
    index: int
    x_k: int
    q: float
    hit: float
    slack: float  # hit - min(q, 1 - q)


@dataclass(frozen=True)
class Poisson2Result:
    k: int
    samples: tuple[Poisson2Sample, ...]
    skipped: int
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def poisson2_experiment(
    net: PlanarNetwork,
    tiling: RectangleTiling,
    K: int,
    N: int,
    seed: int,
    *,
    slack_tol: float = 1e-8,
    step_cap: int | None = None,
) -> Poisson2Result:
    """
    U = (geodesic from the root to the exit vertex of X) + trace of Y. A walk
    from X_k that lands in the arc (theta-, theta+) on the far side of U must
    cross U, so P(hit U) >= min(Q, 1 - Q) for the plain walk absorbed at B.
    """
    measure = ArcMeasure(net, tiling)
    samples: list[Poisson2Sample] = []
    skipped = 0
    for i, x, y, tp, tm in _qk_triples(net, tiling, N, seed, step_cap):
        if x.steps <= K or abs(tp - tm) <= 1e-12:
            skipped += 1
            continue
        xk = x.path[K]
        q = measure.at((tm, tp), xk)
        U = set(geodesic(net, net.root, x.exit_vertex)) | set(y.path)
        hit = path_hitting_probability(net, U, xk)
        samples.append(Poisson2Sample(i, xk, q, hit, hit - min(q, 1.0 - q)))
    bad = sum(s.slack < -slack_tol for s in samples)
    logger.bind(network=net.name).info(
        "disconnection inequality sampled", k=K, kept=len(samples), violations=bad
    )
    return Poisson2Result(K, tuple(samples), skipped, bad)


# -------------------------------------------------------------------------
# 6. 鞅检验 (optional stopping)
# -------------------------------------------------------------------------
@dataclass(frozen=True)
class MartingaleResult:
    start: int
    expected: float
    mean: float
    stderr: float
    n: int
    passed: bool


def martingale_check(
    net: PlanarNetwork,
    h: np.ndarray,
    start: int,
    N: int,
    seed: int,
    *,
    sigmas: float = 4.0,
    step_cap: int | None = None,
) -> MartingaleResult:
    """E_start[h(X_tau)] against h(start) for h harmonic off B."""
    if start in net.absorbing:
        raise StartAbsorbing(f"start vertex {start} is absorbing")
    kernel = _Kernel.plain(net)
    stop = net.absorbing_mask.tolist()
    cap = step_cap or settings.WALK_STEP_CAP
    h = np.asarray(h, dtype=float)
    ends = fan_out(lambda i: _walk(kernel, start, stop, _stream(seed, i), cap)[0][-1], range(N))
    vals = h[np.asarray(ends)]
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(N)) if N > 1 else float("inf")
    expected = float(h[start])
    return MartingaleResult(
        start=start,
        expected=expected,
        mean=mean,
        stderr=se,
        n=N,
        passed=abs(mean - expected) <= sigmas * se + 1e-12,
    )
