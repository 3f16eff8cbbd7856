import numpy as np
import pytest

from services.atlas.app.core.exceptions import UsageError
from tests.conftest import network
from workers.potential.harmonic import solve_escape
from workers.rough.rough_iso import (
    conductance_comparison_check,
    decorate,
    edge_load,
    energy_constants,
    energy_pullback_check,
    hitting_bound_check,
    identity_isometry,
    pendant,
    random_hitting_trials,
    random_trials,
    subdivide,
    verify_rough_isometry,
)


def test_identity_passes():
    net = network("hyp7(2)")
    ri = identity_isometry(net)
    assert verify_rough_isometry(net, net, ri.phi, 1, 0, ri.paths).passed


def test_subdivided_series(series2):
    sub, ri = subdivide(series2)
    assert (sub.n_vertices, sub.n_edges) == (5, 4)
    assert (ri.alpha, ri.beta) == (2.0, 1.0)
    assert solve_escape(sub).eta == pytest.approx(0.25, abs=1e-9)
    assert verify_rough_isometry(series2, sub, ri.phi, 2, 1, ri.paths).passed


def test_subdivision_needs_its_constants():
    net = network("hyp7(2)")
    sub, ri = subdivide(net)
    report = verify_rough_isometry(net, sub, ri.phi, 1, 0)
    assert not report.passed
    assert report.distance_witness is not None
    assert report.surjectivity_witness is not None


def test_pendant_constants():
    net = network("hyp7(3)")
    big, ri = pendant(net, 2)
    assert big.n_vertices == 3 * net.n_vertices
    assert (ri.alpha, ri.beta) == (1.0, 2.0)
    assert not big.is_triangulation
    same, ident = pendant(net, 0)
    assert same is net and (ident.alpha, ident.beta) == (1.0, 0.0)


def test_decorate_schemes():
    net = network("hyp7(2)")
    assert decorate(net, "pendant(1)")[1].beta == 1.0
    assert decorate(net, "identity")[0] is net
    with pytest.raises(UsageError):
        decorate(net, "twist")


def test_energy_constants_and_load(series2):
    _, ri = subdivide(series2)
    C1, C2, C3 = energy_constants(ri)
    assert C1 == 3.0 and C3 == 1.0
    assert C2 >= 1.0
    assert edge_load(ri) == 1


def test_energy_pullback(series2):
    sub, ri = subdivide(series2)
    assert energy_pullback_check(ri, np.ones(sub.n_vertices)).lhs == 0.0
    c = energy_pullback_check(ri, solve_escape(sub).y)
    assert c.passed
    assert c.lhs <= c.constant * c.rhs


def test_conductance_comparison(series2):
    _, ri = subdivide(series2)
    c = conductance_comparison_check(ri, {series2.root}, series2.absorbing)
    assert c.lhs == pytest.approx(0.5, abs=1e-9)
    assert c.rhs == pytest.approx(0.25, abs=1e-9)
    assert c.passed
    with pytest.raises(UsageError):
        conductance_comparison_check(ri, {0, 1}, {1})


@pytest.mark.parametrize("scheme", ["subdivide", "pendant(2)"])
def test_random_trials_on_decorated_hyp7(scheme):
    _, ri = decorate(network("hyp7(3)"), scheme)
    report = random_trials(ri, 50, seed=0)
    assert len(report.energy) == 50
    assert report.passed


def test_hitting_bound_oracles(series2):
    c = hitting_bound_check(series2, 0, {1})
    assert c.lhs == pytest.approx(1.0) and c.rhs == pytest.approx(2.0)
    assert c.passed
    whole = hitting_bound_check(series2, 0, series2.absorbing)
    assert whole.lhs == 1.0 and whole.rhs == pytest.approx(1.0)
    with pytest.raises(UsageError):
        hitting_bound_check(series2, 0, {0})


def test_random_hitting_trials():
    hits = random_hitting_trials(network("hyp7(4)"), 20, seed=0)
    assert len(hits) == 20
    assert all(c.passed for c in hits)
