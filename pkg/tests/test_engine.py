import pytest
from pydantic import ValidationError

from orchestrator.engine import (
    available_experiments,
    load_acceptance,
    load_plan,
    render_markdown,
    run_experiment,
)
from services.atlas.app.core.config import Settings
from services.atlas.app.core.exceptions import (
    EXIT_FAILURE,
    EXIT_NUMERICAL,
    EXIT_USAGE,
    NonConvergence,
    NotPlanar,
    OrderMismatch,
    exit_code_for,
)
from services.atlas.app.schemas.policy import AcceptancePolicy, ExperimentPlan
from workers.pool import fan_out


def test_plans_and_policy():
    assert available_experiments() == sorted(
        ["compare", "exit_measure", "martin", "packing", "poisson2", "qk", "rough_energy", "tiling"]
    )
    for name in available_experiments():
        assert load_plan(name).name == name
    policy = load_acceptance()
    assert policy.exit_measure_max_deviation == 0.02
    assert policy.qk_ks_max == 0.10


def test_compare_experiment_report():
    report = run_experiment("compare", {"depths": [2, 3]}, seed=1)
    assert report.passed
    assert len(report.checks) == 4
    assert report.header.seed == 1
    md = render_markdown(report)
    assert md.startswith("# compare")
    assert "PASS" in md


def test_every_acceptance_key_is_read_by_a_plan():
    used = {key for name in available_experiments() for key in load_plan(name).tolerances}
    assert used == set(AcceptancePolicy.model_fields)


def test_plan_rejects_unknown_tolerance_key():
    with pytest.raises(ValidationError):
        ExperimentPlan(name="tiling", tolerances=["tiling_tol", "no_such_key"])


def test_packing_tolerance_is_stricter_than_acceptance():
    policy = load_acceptance()
    assert Settings().PACKING_TOL <= policy.packing_angle_residual


def test_tiling_experiment_small():
    report = run_experiment("tiling", {"networks": ["hyp7(2)", "hyp7(3)"]})
    names = [c.name for c in report.checks]
    assert names == [
        "series(2)/oracle", "parallel(2,2)/oracle", "hyp7(2)/invariants", "hyp7(3)/invariants"
    ]
    assert all(c.tolerance is not None for c in report.checks)
    assert report.passed


def test_tiling_experiment_flags_a_wrong_oracle():
    report = run_experiment("tiling", {"oracles": {"series(2)": 0.75}, "networks": []})
    assert not report.passed
    assert report.checks[0].statistic == pytest.approx(0.25, abs=1e-9)


def test_packing_experiment_small():
    report = run_experiment("packing", {"depths": [2, 3]})
    # k4 oracle + 2 depths x 2 modes x 4 checks
    assert len(report.checks) == 17
    assert report.checks[0].name == "k4/radius_ratio"
    angle = [c for c in report.checks if c.name.endswith("angle_residual")]
    assert all(c.tolerance == load_acceptance().packing_angle_residual for c in angle)
    assert report.passed


def test_rough_energy_experiment_small():
    report = run_experiment(
        "rough_energy",
        {"network": "hyp7(2)", "trials": 5, "hitting_network": "hyp7(2)", "hitting_trials": 5},
    )
    assert report.passed
    assert set(report.data) == {"subdivide", "pendant(2)"}


def test_qk_experiment_small():
    report = run_experiment("qk", {"network": "hyp7(3)", "k": 1, "n": 600}, seed=3)
    assert report.checks[0].name == "ks_distance"
    assert report.passed


@pytest.mark.slow
@pytest.mark.parametrize(
    "name",
    ["exit_measure", "qk", "poisson2", "martin", "rough_energy", "compare", "tiling", "packing"],
)
def test_acceptance_experiments(name):
    assert run_experiment(name).passed


def test_exit_codes():
    assert exit_code_for(NotPlanar("x")) == EXIT_USAGE
    assert exit_code_for(NonConvergence("x", residual=1.0)) == EXIT_NUMERICAL
    assert exit_code_for(OrderMismatch("x", triple=(1, 2, 3))) == EXIT_FAILURE
    assert exit_code_for(RuntimeError("x")) == EXIT_FAILURE


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("BOUNDARY_ATLAS_THREADS", "3")
    assert Settings().THREADS == 3
    monkeypatch.setenv("BOUNDARY_ATLAS_THREADS", "0")
    assert Settings().THREADS == 1


def test_fan_out_keeps_order():
    assert fan_out(lambda x: x * x, list(range(37)), workers=4) == [x * x for x in range(37)]
    assert fan_out(lambda x: x, [], workers=4) == []
