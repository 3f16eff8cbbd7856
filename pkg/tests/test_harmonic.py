import numpy as np
import pytest

from services.atlas.app.core.exceptions import EmptyTarget, InfiniteConductance, Overlap
from tests.conftest import network
from workers.potential.harmonic import (
    conductance_to_boundary,
    dirichlet_energy,
    effective_conductance,
    exit_distribution,
    green_expected_visits,
    hitting_probability,
    solve_escape,
)
from workers.potential.solver import DirichletProblem, harmonic_residual

TOL = 1e-9


def test_series_escape(series2):
    p = solve_escape(series2)
    assert p.y.tolist() == pytest.approx([0.0, 0.5, 1.0], abs=TOL)
    assert p.eta == pytest.approx(0.5, abs=TOL)
    assert np.abs(p.edge_flow(series2)) == pytest.approx([0.5, 0.5], abs=TOL)


def test_parallel_escape(parallel22):
    p = solve_escape(parallel22)
    assert p.y[1] == pytest.approx(0.5, abs=TOL)
    assert p.y[2] == pytest.approx(0.5, abs=TOL)
    assert p.eta == pytest.approx(1.0, abs=TOL)


def test_boundary_values_exact():
    net = network("hyp7(3)")
    y = solve_escape(net).y
    assert np.all(y[net.boundary] == 1.0)
    assert y[net.root] == 0.0
    assert np.all((y >= 0) & (y <= 1))


def test_dirichlet_principle(series2, parallel22):
    for net, eta in ((series2, 0.5), (parallel22, 1.0)):
        y = solve_escape(net).y
        assert dirichlet_energy(net, y) == pytest.approx(eta, abs=TOL)
        assert dirichlet_energy(net, np.ones(net.n_vertices)) == 0.0


def test_effective_conductance_oracles(series2, parallel22):
    assert effective_conductance(series2, 0, 2) == pytest.approx(0.5, abs=TOL)
    assert effective_conductance(parallel22, 0, 3) == pytest.approx(1.0, abs=TOL)
    assert effective_conductance(series2, 0, 1) == pytest.approx(1.0, abs=TOL)


def test_conductance_to_boundary_matches_eta():
    net = network("hyp7(4)")
    assert conductance_to_boundary(net, net.root) == pytest.approx(
        solve_escape(net).eta, rel=1e-8
    )
    with pytest.raises(InfiniteConductance):
        conductance_to_boundary(net, int(net.boundary[0]))


def test_green_oracles(series2):
    assert green_expected_visits(series2, 0, 1) == pytest.approx(2.0, abs=TOL)
    assert green_expected_visits(series2, 1, 1) == pytest.approx(2.0, abs=TOL)
    assert green_expected_visits(series2, 2, 1) == 0.0


def test_hitting_probability_errors(series2):
    with pytest.raises(EmptyTarget):
        hitting_probability(series2, [], [2])
    with pytest.raises(Overlap):
        hitting_probability(series2, [1, 2], [2])


def test_hitting_is_harmonic():
    net = network("hyp7(3)")
    b = int(net.boundary[0])
    hv = hitting_probability(net, b, net.absorbing - {b})
    assert harmonic_residual(net, hv.h, net.absorbing) < 1e-9


def test_exit_distribution_sums_to_one():
    net = network("hyp7(3)")
    law = exit_distribution(net)
    assert set(law) == set(net.absorbing)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-10)


def test_cg_agrees_with_direct():
    net = network("hyp7(3)")
    values = np.zeros(net.n_vertices)
    values[net.boundary] = 1.0
    fixed = [net.root, *net.boundary.tolist()]
    direct = DirichletProblem(net, fixed, method="direct", tol=1e-8).solve(values)
    cg = DirichletProblem(net, fixed, method="cg", tol=1e-8).solve(values)
    assert np.max(np.abs(direct - cg)) < 1e-8


def test_multi_rhs_solve(series2):
    problem = DirichletProblem(series2, [0, 2])
    values = np.zeros((3, 2))
    values[2, 0] = 1.0
    values[0, 1] = 1.0
    out = problem.solve(values)
    assert out[1].tolist() == pytest.approx([0.5, 0.5])
