import numpy as np
import pytest

from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import StartAbsorbing, UsageError, WalkTooShort
from tests.conftest import network, tiled
from workers.potential.harmonic import hitting_probability
from workers.walks.walk_mc import (
    ArcMeasure,
    arc_harmonic_measure,
    arc_harmonic_vector,
    exit_measure,
    geodesic,
    martingale_check,
    path_hitting_probability,
    poisson2_experiment,
    qk_experiment,
    run_walk,
)


def _adjacent(net, path):
    return all(b in net.neighbors(a) for a, b in zip(path, path[1:]))


# ---------- single walks ----------
def test_walk_structure(series2):
    for i in range(20):
        t = run_walk(series2, 1, seed=3, index=i)
        assert t.path[0] == 1 and t.exit_vertex == 2
        assert _adjacent(series2, t.path)
        u = run_walk(series2, 1, seed=3, absorb_at_root=True, index=i)
        assert u.exit_vertex in (0, 2) and u.steps == 1


def test_forced_single_step():
    t = run_walk(network("series(1)"), 0, seed=0)
    assert t.path == (0, 1) and t.steps == 1


def test_walk_is_seeded():
    net = network("hyp7(3)")
    a = run_walk(net, net.root, seed=11, index=5)
    b = run_walk(net, net.root, seed=11, index=5)
    assert a.path == b.path
    assert any(
        run_walk(net, net.root, seed=12, index=i).path
        != run_walk(net, net.root, seed=11, index=i).path
        for i in range(5)
    )


def test_start_absorbing(series2):
    with pytest.raises(StartAbsorbing):
        run_walk(series2, 2, seed=0)


def test_gambler_ruin(series2):
    ends = [run_walk(series2, 1, 7, True, index=i).exit_vertex for i in range(20_000)]
    assert np.mean(np.array(ends) == 2) == pytest.approx(0.5, abs=0.02)


@pytest.mark.slow
def test_gambler_ruin_full(series2):
    ends = [run_walk(series2, 1, 7, True, index=i).exit_vertex for i in range(100_000)]
    assert np.mean(np.array(ends) == 2) == pytest.approx(0.5, abs=0.01)


# ---------- exit measures ----------
def test_series_exit_measure():
    net, t = tiled("series(2)")
    hist = exit_measure(net, t, 200, seed=1)
    assert hist.as_dict() == {2: 200}
    assert hist.max_deviation == pytest.approx(0.0, abs=1e-12)


def test_parallel_sides():
    net, t = tiled("parallel(2,2)")
    hist = exit_measure(net, t, 20_000, seed=2)
    assert hist.side_counts[1] / hist.total == pytest.approx(0.5, abs=0.02)
    assert hist.side_counts[1] + hist.side_counts[2] == hist.total


def test_restart_mode_agrees_with_doob():
    net, t = tiled("hyp7(2)")
    doob = exit_measure(net, t, 4000, seed=5)
    restart = exit_measure(net, t, 4000, seed=5, mode="restart")
    assert doob.max_deviation < 0.04
    assert restart.max_deviation < 0.04


def test_exit_measure_is_lebesgue_small():
    net, t = tiled("hyp7(3)")
    assert exit_measure(net, t, 5000, seed=0).max_deviation < 0.03


@pytest.mark.slow
def test_exit_measure_is_lebesgue():
    net, t = tiled("hyp7(4)")
    assert exit_measure(net, t, 100_000, seed=0).max_deviation <= 0.02


def test_thread_count_does_not_change_histogram(monkeypatch):
    net, t = tiled("hyp7(2)")
    monkeypatch.setattr(settings, "THREADS", 1)
    one = exit_measure(net, t, 500, seed=9)
    monkeypatch.setattr(settings, "THREADS", 4)
    four = exit_measure(net, t, 500, seed=9)
    assert np.array_equal(one.counts, four.counts)
    assert np.array_equal(one.edge_counts, four.edge_counts)


def test_exit_measure_rejects_bad_input():
    net, t = tiled("series(2)")
    with pytest.raises(UsageError):
        exit_measure(net, t, 0, seed=0)
    with pytest.raises(UsageError):
        exit_measure(net, t, 10, seed=0, mode="lazy")


# ---------- arc measures ----------
def test_full_circle_arc():
    net, t = tiled("hyp7(2)")
    q = arc_harmonic_vector(net, t, (0.0, t.eta))
    assert q == pytest.approx(np.ones(net.n_vertices), abs=1e-9)


def test_parallel_half_arc():
    net, t = tiled("parallel(2,2)")
    s = t.interval_start[1]
    q = arc_harmonic_vector(net, t, (s, s + 0.5))
    assert q[1] == pytest.approx(0.75, abs=1e-9)
    assert q[2] == pytest.approx(0.25, abs=1e-9)
    assert q[0] == pytest.approx(0.5, abs=1e-9)


def test_root_sees_lebesgue():
    net, t = tiled("hyp7(3)")
    half = (0.2 * t.eta, 0.7 * t.eta)
    assert arc_harmonic_measure(net, t, half, net.root) == pytest.approx(0.5, abs=1e-8)
    conditioned = ArcMeasure(net, t, conditioned=True)
    assert conditioned.at(half, net.root) == pytest.approx(0.5, abs=1e-8)


def test_complementary_arcs_sum_to_one():
    net, t = tiled("hyp7(3)")
    m = ArcMeasure(net, t, conditioned=True)
    a, b = 0.1 * t.eta, 0.45 * t.eta
    total = m.vector((a, b)) + m.vector((b, a + t.eta))
    free = [v for v in range(net.n_vertices) if v not in net.absorbing]
    assert total[free] == pytest.approx(np.ones(len(free)), abs=1e-8)


def test_arc_vector_mean_value_uses_exit_edges():
    net, t = tiled("hyp7(3)")
    m = ArcMeasure(net, t)
    arc = (0.1 * t.eta, 0.45 * t.eta)
    q, frac = m.vector(arc), m.exit_fractions(arc)
    slot = {int(e): i for i, e in enumerate(m.exit_edges)}
    for v in range(net.n_vertices):
        if v in net.absorbing:
            continue
        total = 0.0
        for d in net.darts_at(v):
            u, c = int(net.head[d]), net.dart_conductance[d]
            total += c * (frac[slot[int(net.edge_of[d])]] if u in net.absorbing else q[u])
        assert total == pytest.approx(net.vertex_conductance[v] * q[v], abs=1e-8)


def test_arc_vector_boundary_is_flow_weighted_edge_mean():
    net, t = tiled("hyp7(3)")
    m = ArcMeasure(net, t)
    arc = (0.1 * t.eta, 0.45 * t.eta)
    q, frac = m.vector(arc), m.exit_fractions(arc)
    width = t.rect_arrays()[1][m.exit_edges]
    ends = net.edge_darts[m.exit_edges]
    for b in net.boundary:
        if t.interval_length[b] <= 0:
            continue
        at_b = (net.tail[ends[:, 0]] == b) | (net.head[ends[:, 0]] == b)
        mean = np.sum(width[at_b] * frac[at_b]) / np.sum(width[at_b])
        assert q[b] == pytest.approx(mean, abs=1e-9)


# ---------- Q_k and the disconnection inequality ----------
def test_qk_rejects_bad_parameters():
    net, t = tiled("hyp7(2)")
    with pytest.raises(UsageError):
        qk_experiment(net, t, K=-1, N=10, seed=0)
    with pytest.raises(UsageError):
        qk_experiment(net, t, K=1, N=0, seed=0)


def test_qk_every_excursion_too_short():
    net, t = tiled("hyp7(2)")
    with pytest.raises(WalkTooShort):
        qk_experiment(net, t, K=100_000, N=20, seed=0)


def test_qk_at_root_is_uniform_small():
    net, t = tiled("hyp7(3)")
    res = qk_experiment(net, t, K=1, N=800, seed=4)
    assert len(res.samples) + res.too_short + res.tied == 800
    assert np.all((res.values >= 0) & (res.values <= 1))
    assert res.statistic <= 0.10


@pytest.mark.slow
def test_qk_uniformity():
    net, t = tiled("hyp7(6)")
    res = qk_experiment(net, t, K=3, N=2000, seed=0)
    assert res.statistic <= 0.10


def test_qk_is_reproducible():
    net, t = tiled("hyp7(2)")
    a = qk_experiment(net, t, K=1, N=50, seed=8)
    b = qk_experiment(net, t, K=1, N=50, seed=8)
    assert np.array_equal(a.values, b.values)


def test_path_hitting(series2):
    assert path_hitting_probability(series2, {0, 1}, 1) == 1.0
    assert path_hitting_probability(series2, {1}, 0) == pytest.approx(1.0)


def test_geodesic():
    net = network("hyp7(3)")
    b = int(net.boundary[0])
    g = geodesic(net, net.root, b)
    assert g[0] == net.root and g[-1] == b
    assert len(g) - 1 == net.distances_from(net.root)[b]
    assert _adjacent(net, g)


def test_disconnection_inequality():
    net, t = tiled("hyp7(3)")
    res = poisson2_experiment(net, t, K=1, N=60, seed=2)
    assert res.samples
    assert res.passed


def test_martingale_check():
    net = network("hyp7(3)")
    b = int(net.boundary[0])
    h = hitting_probability(net, b, net.absorbing - {b}).h
    res = martingale_check(net, h, net.root, 2000, seed=1)
    assert res.passed
    assert res.expected == pytest.approx(h[net.root])
