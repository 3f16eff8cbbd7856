# -*- coding: utf-8 -*-
"""
实验编排 (named experiment plans -> ExperimentReport)

A plan lives in orchestrator/experiments/<name>.yaml (parameters with
defaults); pass/fail bounds come from rules/acceptance.yaml. CLI overrides are
merged over the plan parameters before the run.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml
from jinja2 import Environment, FileSystemLoader, StrictUndefined
from loguru import logger
from pydantic import ValidationError

from providers.storage.local_io import make_header
from services.atlas.app.core.exceptions import OrderMismatch, UsageError
from services.atlas.app.schemas.policy import AcceptancePolicy, ExperimentPlan
from services.atlas.app.schemas.report import CheckResult, ExperimentReport
from workers.martin.martin_boundary import (
    compare_boundaries,
    martin_convergence_check,
    martin_table,
)
from workers.network.generators import generate
from workers.network.planar_network import PlanarNetwork
from workers.packing.circle_packing import layout, pack_radii, packing_checks, radius_ratio
from workers.potential.harmonic import dirichlet_energy, effective_conductance, solve_escape
from workers.rough.rough_iso import (
    decorate,
    edge_load,
    energy_constants,
    random_hitting_trials,
    random_trials,
)
from workers.tiling.square_tiling import (
    RectangleTiling,
    build_tiling,
    check_tiling,
    harmonic_measure_defect,
)
from workers.walks.walk_mc import exit_measure, poisson2_experiment, qk_experiment

ROOT = Path(__file__).resolve().parent.parent
EXPERIMENTS_DIR = ROOT / "orchestrator" / "experiments"
ACCEPTANCE_PATH = ROOT / "rules" / "acceptance.yaml"
TEMPLATES_DIR = ROOT / "templates"

Runner = Callable[
    [dict[str, Any], int, AcceptancePolicy, float | None], tuple[list[CheckResult], dict]
]


# -------------------------------------------------------------------------
# 1. 读取计划与阈值 (plans and policy)
# -------------------------------------------------------------------------
def _load_yaml(path: Path) -> Any:
    if not path.exists():
        raise UsageError(f"missing file: {path}")
    with path.open("r", encoding="utf-8") as fh:
        return yaml.safe_load(fh) or {}


def load_acceptance(path: Path = ACCEPTANCE_PATH) -> AcceptancePolicy:
    try:
        return AcceptancePolicy.model_validate(_load_yaml(path))
    except ValidationError as exc:
        raise UsageError(f"{path}: {exc.errors()[0]['msg']}") from exc


def available_experiments() -> list[str]:
    return sorted(p.stem for p in EXPERIMENTS_DIR.glob("*.yaml"))


def load_plan(name: str) -> ExperimentPlan:
    path = EXPERIMENTS_DIR / f"{name}.yaml"
    if not path.exists():
        raise UsageError(f"unknown experiment {name!r}", known=available_experiments())
    try:
        return ExperimentPlan.model_validate(_load_yaml(path))
    except ValidationError as exc:
        raise UsageError(f"{path}: {exc.errors()[0]['msg']}") from exc


# -------------------------------------------------------------------------
# 2. 各实验 (runners)
# -------------------------------------------------------------------------
def _tiled(spec: str, tol: float | None) -> tuple[PlanarNetwork, RectangleTiling]:
    net = generate(spec)
    return net, build_tiling(net, solve_escape(net, tol), tol=tol)


def _positive(params: dict[str, Any], key: str) -> int:
    value = int(params[key])
    if value < 1:
        raise UsageError(f"parameter {key} must be >= 1, got {value}")
    return value


def _run_exit_measure(params, seed, policy, tol):
    net, tiling = _tiled(params["network"], tol)
    n = _positive(params, "n")
    hist = exit_measure(net, tiling, n, seed, mode=params.get("mode", "doob"))
    exact = harmonic_measure_defect(net, tiling)
    checks = [
        CheckResult(
            name="max_deviation",
            statistic=hist.max_deviation,
            tolerance=policy.exit_measure_max_deviation,
            passed=hist.max_deviation <= policy.exit_measure_max_deviation,
        ),
        CheckResult(
            name="exact_interval_defect",
            statistic=exact,
            tolerance=policy.exact_measure_tol,
            passed=exact <= policy.exact_measure_tol,
        ),
        CheckResult(
            name="counts_total",
            statistic=float(hist.counts.sum()),
            passed=int(hist.counts.sum()) == n,
        ),
    ]
    data = {
        "boundary": hist.boundary.tolist(),
        "counts": hist.counts.tolist(),
        "reference": hist.reference.tolist(),
        "side_counts": {int(v): int(c) for v, c in enumerate(hist.side_counts) if c},
    }
    return checks, data


def _run_qk(params, seed, policy, tol):
    net, tiling = _tiled(params["network"], tol)
    res = qk_experiment(net, tiling, int(params["k"]), _positive(params, "n"), seed)
    ok = bool(res.statistic <= policy.qk_ks_max)
    if not ok:
        logger.warning(
            "Q_k KS distance above the finite-depth bound; recalibrate qk_ks_max "
            "with a depth study",
            statistic=res.statistic,
            bound=policy.qk_ks_max,
        )
    checks = [
        CheckResult(
            name="ks_distance",
            statistic=res.statistic,
            tolerance=policy.qk_ks_max,
            passed=ok,
            details={"pvalue": res.pvalue, "too_short": res.too_short, "tied": res.tied},
        )
    ]
    return checks, {"q": res.values.tolist()}


def _run_poisson2(params, seed, policy, tol):
    net, tiling = _tiled(params["network"], tol)
    res = poisson2_experiment(
        net, tiling, int(params["k"]), _positive(params, "n"), seed,
        slack_tol=policy.poisson2_slack,
    )
    worst = min((s.slack for s in res.samples), default=0.0)
    checks = [
        CheckResult(
            name="disconnection_inequality",
            statistic=worst,
            tolerance=policy.poisson2_slack,
            passed=res.passed,
            details={"samples": len(res.samples), "skipped": res.skipped},
        )
    ]
    return checks, {"slack": [s.slack for s in res.samples]}


def _run_martin(params, seed, policy, tol):
    net = generate(params["network"])
    cand = np.array(
        [v for v in range(net.n_vertices) if v not in net.absorbing and v != net.root]
    )
    rng = np.random.Generator(np.random.Philox(key=np.array([0, seed], dtype=np.uint64)))
    k = min(int(params["anchors"]), cand.size)
    anchors = sorted(rng.choice(cand, k, replace=False).tolist())
    table = martin_table(net, anchors, tol)
    norm = float(np.max(np.abs(table.columns[net.root] - 1.0)))
    checks = [
        CheckResult(name="root_normalization", statistic=norm, tolerance=0.0, passed=norm == 0.0),
        CheckResult(
            name="harmonicity",
            statistic=table.residual,
            tolerance=policy.martin_harmonicity,
            passed=table.residual < policy.martin_harmonicity,
        ),
    ]
    data: dict[str, Any] = {"anchors": anchors, "convergence": {}}
    n_theta = _positive(params, "thetas")
    for j in range(n_theta):
        theta0 = j / n_theta
        conv = martin_convergence_check(
            theta0, params["depths"], window_radius=int(params["window_radius"]), tol=tol
        )
        checks.append(
            CheckResult(
                name=f"convergence_theta_{theta0:.4f}",
                statistic=conv.differences[-1],
                passed=conv.decreasing,
                details={"anchors": list(conv.anchors)},
            )
        )
        data["convergence"][f"{theta0:.4f}"] = list(conv.differences)
    return checks, data


def _run_compare(params, seed, policy, tol):
    checks, moduli = [], {}
    for r in params["depths"]:
        net, tiling = _tiled(f"hyp7({int(r)})", tol)
        for mode in params["modes"]:
            packing = layout(net, pack_radii(net, mode))
            name = f"hyp7({int(r)})/{mode}"
            try:
                corr = compare_boundaries(net, tiling, packing)
            except OrderMismatch as exc:
                checks.append(CheckResult(name=name, passed=False, details={"triple": exc.triple}))
                continue
            moduli[name] = corr.modulus
            checks.append(
                CheckResult(name=name, statistic=corr.modulus, passed=True,
                            details={"sign": corr.sign, "vertices": len(corr.triples)})
            )
    return checks, {"modulus": moduli}


def _run_rough_energy(params, seed, policy, tol):
    net = generate(params["network"])
    checks: list[CheckResult] = []
    data: dict[str, Any] = {}
    n = _positive(params, "trials")
    for deco in params["decorations"]:
        _, ri = decorate(net, deco)
        C1, C2, C3 = energy_constants(ri)
        load = edge_load(ri)
        trials = random_trials(ri, n, seed)
        ratio = max(
            (c.lhs / (c.constant * c.rhs) for c in trials.energy if c.rhs > 0), default=0.0
        )
        checks += [
            CheckResult(name=f"{deco}/edge_load", statistic=float(load), tolerance=C2,
                        passed=load <= C2),
            CheckResult(name=f"{deco}/energy", statistic=ratio, tolerance=1.0,
                        passed=all(c.passed for c in trials.energy)),
            CheckResult(
                name=f"{deco}/conductance",
                passed=all(c.passed for c in trials.conductance),
            ),
        ]
        data[deco] = {"alpha": ri.alpha, "beta": ri.beta, "C1": C1, "C2": C2, "C3": C3}

    hnet = generate(params["hitting_network"])
    hits = random_hitting_trials(hnet, _positive(params, "hitting_trials"), seed)
    slack = min(c.rhs - c.lhs for c in hits)
    checks.append(
        CheckResult(name="hitting_bound", statistic=slack, passed=all(c.passed for c in hits))
    )
    return checks, data


def _run_tiling(params, seed, policy, tol):
    checks: list[CheckResult] = []
    data: dict[str, Any] = {"eta": {}}
    for spec, eta0 in params["oracles"].items():
        net = generate(spec)
        profile = solve_escape(net, tol)
        dev = max(
            abs(profile.eta - eta0),
            abs(dirichlet_energy(net, profile.y) - eta0),
            abs(effective_conductance(net, net.root, net.absorbing, tol) - eta0),
        )
        checks.append(
            CheckResult(
                name=f"{spec}/oracle",
                statistic=dev,
                tolerance=policy.oracle_tol,
                passed=dev <= policy.oracle_tol,
            )
        )
    for spec in params["networks"]:
        net, tiling = _tiled(spec, tol)
        rep = check_tiling(tiling, net, tol=policy.tiling_tol)
        worst = max(rep.area_defect, rep.max_aspect_defect, rep.boundary_sum_defect)
        checks.append(
            CheckResult(
                name=f"{spec}/invariants",
                statistic=worst,
                tolerance=policy.tiling_tol,
                passed=rep.passed,
                details={
                    "disjoint": len(rep.disjoint_violations),
                    "interval": len(rep.interval_violations),
                    "face_adjacency": len(rep.face_adjacency_violations),
                },
            )
        )
        data["eta"][spec] = tiling.eta
    return checks, data


def _run_packing(params, seed, policy, tol):
    checks: list[CheckResult] = []
    data: dict[str, Any] = {"sum_of_squares": {}}
    for spec, ratio0 in params["ratio_oracles"].items():
        net = generate(spec)
        radii = pack_radii(net, "euclidean_fixed_boundary")
        ratio = radius_ratio(layout(net, radii), radii.interior)
        dev = abs(ratio - float(ratio0)) if ratio is not None else float("inf")
        checks.append(
            CheckResult(
                name=f"{spec}/radius_ratio",
                statistic=dev,
                tolerance=policy.oracle_tol,
                passed=dev <= policy.oracle_tol,
            )
        )
    for r in params["depths"]:
        net = generate(f"hyp7({int(r)})")
        for mode in params["modes"]:
            radii = pack_radii(net, mode)
            p = layout(net, radii)
            rep = packing_checks(net, p, tol=policy.packing_tangency_residual)
            name = f"hyp7({int(r)})/{mode}"
            checks += [
                CheckResult(
                    name=f"{name}/angle_residual",
                    statistic=radii.residual,
                    tolerance=policy.packing_angle_residual,
                    passed=radii.residual < policy.packing_angle_residual,
                ),
                CheckResult(
                    name=f"{name}/tangency_residual",
                    statistic=rep.tangency_residual,
                    tolerance=policy.packing_tangency_residual,
                    passed=rep.tangency_residual < policy.packing_tangency_residual,
                ),
                CheckResult(
                    name=f"{name}/sum_of_squares",
                    statistic=rep.sum_of_squares,
                    tolerance=1.0,
                    passed=rep.sum_of_squares <= 1.0,
                ),
                CheckResult(
                    name=f"{name}/overlap_containment",
                    statistic=max(rep.overlap_violation, rep.containment_violation),
                    tolerance=policy.packing_tangency_residual,
                    passed=rep.passed,
                ),
            ]
            data["sum_of_squares"][name] = rep.sum_of_squares
    return checks, data


RUNNERS: dict[str, Runner] = {
    "exit_measure": _run_exit_measure,
    "qk": _run_qk,
    "poisson2": _run_poisson2,
    "martin": _run_martin,
    "compare": _run_compare,
    "rough_energy": _run_rough_energy,
    "tiling": _run_tiling,
    "packing": _run_packing,
}


# -------------------------------------------------------------------------
# 3. 执行与报告 (run + render)
# -------------------------------------------------------------------------
def run_experiment(
    name: str,
    overrides: dict[str, Any] | None = None,
    seed: int = 0,
    tol: float | None = None,
    header_config: dict[str, Any] | None = None,
) -> ExperimentReport:
    plan = load_plan(name)
    params = {**plan.params, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    policy = load_acceptance()
    log = logger.bind(experiment=name, seed=seed)
    log.info("experiment started", params=params)

    checks, data = RUNNERS[plan.name](params, seed, policy, tol)

    report = ExperimentReport(
        header=make_header({**(header_config or {}), "params": params}, seed),
        experiment=plan.name,
        seed=seed,
        params=params,
        checks=checks,
        data=data,
    )
    (log.info if report.passed else log.warning)(
        "experiment finished", passed=report.passed, checks=len(checks)
    )
    return report


def render_markdown(report: ExperimentReport) -> str:
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATES_DIR)),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
    )
    return env.get_template("experiment_report.md.j2").render(report=report, passed=report.passed)
