# -*- coding: utf-8 -*-
"""
调和函数 (escape function, hitting probabilities, energies, conductances)

y(v) = P_v(hit B before rho); eta = sum_{u~rho} c(rho,u) y(u). All solves share
``DirichletProblem``; pure functions of (net, inputs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from loguru import logger

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import (
    EmptyTarget,
    InfiniteConductance,
    Overlap,
    UsageError,
)
from services.atlas.app.schemas.profile import ProfileDocument
from workers.network.planar_network import PlanarNetwork
from workers.potential.solver import DirichletProblem


@dataclass(frozen=True)
class HarmonicProfile:
    y: np.ndarray
    eta: float
    flow: np.ndarray  # per dart: c(e) (y(head) - y(tail))
    residual: float
    degenerate: np.ndarray  # per edge: |flow| < tol, clamped to 0

    def edge_flow(self, net: PlanarNetwork) -> np.ndarray:
        return self.flow[net.edge_darts[:, 0]]


@dataclass(frozen=True)
class HittingVector:
    target: frozenset[int]
    stop: frozenset[int]
    h: np.ndarray
    residual: float

    def __getitem__(self, v: int) -> float:
        return float(self.h[v])


def _as_set(vs: Iterable[int] | int) -> frozenset[int]:
    if isinstance(vs, (int, np.integer)):
        return frozenset({int(vs)})
    return frozenset(int(v) for v in vs)


# -------------------------------------------------------------------------
# 1. 逃逸函数 (escape profile)
# -------------------------------------------------------------------------
def solve_escape(net: PlanarNetwork, tol: float | None = None) -> HarmonicProfile:
    tol = tol or settings.SOLVER_TOL
    values = np.zeros(net.n_vertices)
    values[net.boundary] = 1.0
    problem = DirichletProblem(net, [net.root, *net.boundary.tolist()], tol=tol)
    y = problem.solve(values)
    y[net.root] = 0.0
    y[net.boundary] = 1.0

    flow = net.dart_conductance * (y[net.head] - y[net.tail])
    canon = net.edge_darts[:, 0]
    degenerate = np.abs(flow[canon]) < tol
    if degenerate.any():
        flow[net.edge_darts[degenerate].ravel()] = 0.0
        logger.bind(network=net.name).debug(
            "degenerate flows clamped", edges=int(degenerate.sum())
        )
    eta = float(flow[list(net.darts_at(net.root))].sum())

    for a in (y, flow, degenerate):
        a.setflags(write=False)
    logger.bind(network=net.name).info(
        "escape profile solved", eta=eta, residual=problem.last_residual
    )
    return HarmonicProfile(
        y=y, eta=eta, flow=flow, residual=problem.last_residual, degenerate=degenerate
    )


def profile_to_document(net: PlanarNetwork, profile: HarmonicProfile) -> ProfileDocument:
    return ProfileDocument(
        y=profile.y.tolist(),
        flow=profile.flow.tolist(),
        eta=profile.eta,
        residual=profile.residual,
        degenerate_edges=np.flatnonzero(profile.degenerate).tolist(),
    )


# -------------------------------------------------------------------------
# 2. 击中概率 (hitting probabilities)
# -------------------------------------------------------------------------
def hitting_probability(
    net: PlanarNetwork,
    target: Iterable[int] | int,
    stop: Iterable[int] | int = (),
    tol: float | None = None,
) -> HittingVector:
    target, stop = _as_set(target), _as_set(stop)
    if not target:
        raise EmptyTarget("target set is empty")
    if target & stop:
        raise Overlap("target and stop sets intersect", common=sorted(target & stop))
    values = np.zeros(net.n_vertices)
    values[list(target)] = 1.0
    problem = DirichletProblem(net, target | stop, tol=tol)
    h = problem.solve(values)
    h.setflags(write=False)
    return HittingVector(target=target, stop=stop, h=h, residual=problem.last_residual)


def exit_distribution(net: PlanarNetwork, tol: float | None = None) -> dict[int, float]:
    """
    Exact law of the exit vertex for the walk from rho conditioned never to
    return to rho: sum_u c(rho,u) h_b(u) / eta, one multi-RHS solve.
    """
    B = net.boundary
    values = np.zeros((net.n_vertices, B.size))
    values[B, np.arange(B.size)] = 1.0
    problem = DirichletProblem(net, [net.root, *B.tolist()], tol=tol)
    H = problem.solve(values)
    darts = list(net.darts_at(net.root))
    mass = (net.dart_conductance[darts][:, None] * H[net.head[darts]]).sum(axis=0)
    eta = float(mass.sum())
    return {int(b): float(m / eta) for b, m in zip(B, mass)}


# -------------------------------------------------------------------------
# 3. 能量与有效电导 (energy and effective conductance)
# -------------------------------------------------------------------------
def dirichlet_energy(net: PlanarNetwork, f: np.ndarray) -> float:
    f = np.asarray(f, dtype=float)
    d = net.edge_darts[:, 0]
    diff = f[net.head[d]] - f[net.tail[d]]
    return float(np.sum(net.conductance * diff * diff))


def effective_conductance(
    net: PlanarNetwork,
    A: Iterable[int] | int,
    Z: Iterable[int] | int,
    tol: float | None = None,
) -> float:
    A, Z = _as_set(A), _as_set(Z)
    if not A or not Z:
        raise EmptyTarget("effective conductance needs nonempty A and Z")
    minimizer = hitting_probability(net, A, Z, tol=tol)
    return dirichlet_energy(net, minimizer.h)


def conductance_to_boundary(net: PlanarNetwork, v: int, tol: float | None = None) -> float:
    if v in net.absorbing:
        raise InfiniteConductance(f"vertex {v} lies in the absorbing set")
    return effective_conductance(net, {v}, net.absorbing, tol=tol)


def green_expected_visits(
    net: PlanarNetwork, start: int, u: int, tol: float | None = None
) -> float:
    """E_start[#visits to u before absorption in B] = P_start(hit u) / esc(u)."""
    if u in net.absorbing:
        raise UsageError(f"vertex {u} is absorbing")
    if start in net.absorbing:
        return 0.0
    hv = hitting_probability(net, {u}, net.absorbing, tol=tol)
    darts = list(net.darts_at(u))
    c = net.dart_conductance[darts]
    escape = float(np.sum(c * (1.0 - hv.h[net.head[darts]])) / c.sum())
    return hv[start] / escape
