# -*- coding: utf-8 -*-
"""
Dirichlet 问题求解器 (reduced weighted Laplacian)

Rows of the fixed vertices are eliminated; the free block is SPD on a connected
network with a nonempty fixed set. ``direct`` factorizes once with SuperLU and
reuses the factor for every right-hand side; ``cg`` runs Jacobi-preconditioned
conjugate gradients capped at SOLVER_MAXITER_FACTOR * V iterations. Every solve
is followed by the per-vertex residual check |r(v)| <= tol * c(v).
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse import linalg as spla

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import NonConvergence, UsageError
from workers.network.planar_network import PlanarNetwork


class DirichletProblem:
    def __init__(
        self,
        net: PlanarNetwork,
        fixed: Iterable[int],
        *,
        tol: float | None = None,
        method: str | None = None,
    ):
        self.net = net
        self.tol = tol or settings.SOLVER_TOL
        self.fixed = np.unique(np.fromiter((int(v) for v in fixed), dtype=np.int64))
        if self.fixed.size == 0:
            raise UsageError("Dirichlet problem needs at least one fixed vertex")
        mask = np.zeros(net.n_vertices, dtype=bool)
        mask[self.fixed] = True
        self.free = np.flatnonzero(~mask)

        L = net.laplacian
        rows = L[self.free]
        self.L_ff = rows[:, self.free].tocsc()
        self.L_fb = rows[:, self.fixed].tocsr()
        self.scale = net.vertex_conductance[self.free]

        method = method or settings.SOLVER_METHOD
        if method == "auto":
            method = "direct" if self.free.size <= settings.SOLVER_DIRECT_LIMIT else "cg"
        self.method = method
        self._lu = None
        self.last_residual = 0.0

    # ---------- 内部 ----------
    def _factor(self):
        if self._lu is None:
            self._lu = spla.splu(self.L_ff)
        return self._lu

    def _cg(self, b: np.ndarray) -> np.ndarray:
        diag = self.L_ff.diagonal()
        precond = sparse.diags(1.0 / diag)
        atol = 1e-3 * self.tol * float(self.scale.min())
        maxiter = settings.SOLVER_MAXITER_FACTOR * self.net.n_vertices
        x, info = spla.cg(self.L_ff, b, rtol=0.0, atol=atol, maxiter=maxiter, M=precond)
        if info != 0:
            res = self._residual(x, b)
            raise NonConvergence(f"cg stopped after {maxiter} iterations", residual=res)
        return x

    def _residual(self, x: np.ndarray, b: np.ndarray) -> float:
        r = self.L_ff @ x - b
        if r.ndim == 1:
            return float(np.max(np.abs(r) / self.scale))
        return float(np.max(np.abs(r) / self.scale[:, None]))

    # ---------- 求解 ----------
    def solve(self, values: np.ndarray, rhs: np.ndarray | None = None) -> np.ndarray:
        """
        values: length-V vector (or V x k matrix); entries at fixed vertices are
        the boundary data, entries at free vertices are ignored.
        rhs: optional extra source on the free block (n_free or n_free x k).
        Returns the full solution with the same shape as ``values``.
        """
        values = np.asarray(values, dtype=float)
        b = -(self.L_fb @ values[self.fixed])
        if rhs is not None:
            b = b + rhs
        out = values.copy()
        if self.free.size == 0:
            self.last_residual = 0.0
            return out

        if self.method == "direct":
            x = self._factor().solve(np.ascontiguousarray(b))
        elif b.ndim == 1:
            x = self._cg(b)
        else:
            x = np.column_stack([self._cg(b[:, j]) for j in range(b.shape[1])])

        res = self._residual(x, b)
        self.last_residual = res
        if not res <= self.tol:
            raise NonConvergence(
                f"residual {res:.3e} above tol {self.tol:.1e}", residual=res, method=self.method
            )
        out[self.free] = x
        logger.trace("dirichlet solve", method=self.method, free=int(self.free.size), residual=res)
        return out


def harmonic_residual(net: PlanarNetwork, f: np.ndarray, fixed: Iterable[int]) -> float:
    """max over non-fixed v of |sum_u c(v,u)(f(u)-f(v))| / c(v)."""
    mask = np.ones(net.n_vertices, dtype=bool)
    mask[list(fixed)] = False
    r = net.laplacian @ np.asarray(f, dtype=float)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(r[mask]) / net.vertex_conductance[mask]))
