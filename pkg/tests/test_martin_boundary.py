import numpy as np
import pytest

from services.atlas.app.core.exceptions import OrderMismatch, UsageError
from tests.conftest import network, tiled
from workers.martin.martin_boundary import (
    anchor_separation,
    compare_boundaries,
    compare_cyclic_orders,
    green_symmetry_defect,
    harmonic_density,
    martin_convergence_check,
    martin_kernel,
    martin_table,
    select_anchor,
)
from workers.packing.circle_packing import PackingMode, layout, pack_radii


def _inner(net):
    return [v for v in range(net.n_vertices) if v not in net.absorbing and v != net.root]


# ---------- kernels ----------
def test_series_kernel(series2):
    assert martin_kernel(series2, 1).tolist() == pytest.approx([1.0, 1.0, 0.0])
    with pytest.raises(UsageError):
        martin_kernel(series2, 2)


def test_table_normalized_and_harmonic():
    net = network("hyp7(4)")
    anchors = _inner(net)[::9][:20]
    table = martin_table(net, anchors)
    assert np.all(table.columns[net.root] == 1.0)
    assert table.residual < 1e-7
    assert np.allclose(table.column(anchors[3]), martin_kernel(net, anchors[3]), atol=1e-12)


def test_green_function_symmetry():
    net = network("hyp7(3)")
    inner = _inner(net)
    assert green_symmetry_defect(net, inner[10], inner[2]) < 1e-8


# ---------- anchors and depth ----------
def test_anchor_interval_contains_theta():
    net, t = tiled("hyp7(4)")
    for frac in (0.0, 0.3, 0.77):
        theta = frac * t.eta
        u = select_anchor(net, t, theta)
        assert u != net.root and u not in net.absorbing
        rel = np.mod(theta - t.interval_start[u], t.eta)
        assert rel <= t.interval_length[u]


def test_window_at_root_only_is_exact():
    conv = martin_convergence_check(0.3, [2, 3], window_radius=0)
    assert conv.window == (0,)
    assert conv.differences == (0.0,)


def test_convergence_needs_two_depths():
    with pytest.raises(UsageError):
        martin_convergence_check(0.1, [4])


@pytest.mark.slow
@pytest.mark.parametrize("j", range(8))
def test_martin_columns_settle_with_depth(j):
    conv = martin_convergence_check(j / 8, [4, 5, 6])
    assert conv.decreasing, conv.differences


def test_anchor_separation_matrix():
    net, t = tiled("hyp7(4)")
    anchors, sep = anchor_separation(net, t, [0.0, 0.02, 0.5])
    assert len(anchors) == 3
    assert np.allclose(np.diag(sep), 0.0)
    assert np.allclose(sep, sep.T)
    assert sep[0, 2] > 0.0


def test_density_at_root_is_one():
    net, t = tiled("hyp7(3)")
    rep = harmonic_density(net, t, net.root, 6)
    assert rep.densities == pytest.approx(np.ones(6), abs=1e-8)
    assert rep.max_difference < 1e-8


def test_density_on_series(series2):
    _, t = tiled("series(2)")
    rep = harmonic_density(series2, t, 1, 4)
    assert rep.densities == pytest.approx(np.ones(4), abs=1e-9)
    assert rep.anchors == (1, 1, 1, 1)


# ---------- boundary comparison ----------
def test_cyclic_orders_match_up_to_rotation_and_reflection():
    theta = {v: float(v) for v in range(6)}
    rotated = {v: float((v + 2) % 6) for v in range(6)}
    reflected = {v: float(-v % 6) for v in range(6)}
    assert compare_cyclic_orders(theta, rotated) == (list(range(6)), 1)
    assert compare_cyclic_orders(theta, reflected)[1] == -1


def test_shuffled_order_mismatch():
    theta = {v: float(v) for v in range(6)}
    shuffled = {0: 0.0, 1: 2.0, 2: 1.0, 3: 3.0, 4: 4.0, 5: 5.0}
    with pytest.raises(OrderMismatch) as info:
        compare_cyclic_orders(theta, shuffled)
    assert len(info.value.triple) == 3


def test_double_winding_mismatch():
    theta = {v: float(v) for v in range(5)}
    twice = {v: float(2 * v % 5) for v in range(5)}
    with pytest.raises(OrderMismatch):
        compare_cyclic_orders(theta, twice)


def test_tied_theta_follows_outer_cycle():
    # outer cycle 0,1,3,2,4,5; vertices 3 and 2 share a zero-length interval point
    cycle = [0, 1, 3, 2, 4, 5]
    rank = {v: i for i, v in enumerate(cycle)}
    phi = {v: float(rank[v]) for v in cycle}
    theta = {v: float(rank[v]) for v in cycle}
    theta[3] = theta[2] = 2.5
    with pytest.raises(OrderMismatch):
        compare_cyclic_orders(theta, phi)
    order, sign = compare_cyclic_orders(theta, phi, rank)
    assert order == cycle
    assert sign == 1


def test_tied_theta_against_reversed_cycle():
    cycle = [0, 1, 3, 2, 4, 5]
    rank = {v: i for i, v in enumerate(cycle)}
    phi = {v: float(rank[v]) for v in cycle}
    theta = {v: float(6 - rank[v]) for v in cycle}
    theta[3] = theta[2] = 3.5
    order, sign = compare_cyclic_orders(theta, phi, rank)
    assert order == [5, 4, 2, 3, 1, 0]
    assert sign == -1


def test_three_vertices_always_match(k4net):
    _, t = tiled("k4")
    p = layout(k4net, pack_radii(k4net, PackingMode.EUCLIDEAN))
    corr = compare_boundaries(k4net, t, p)
    assert len(corr.triples) == 3


@pytest.mark.parametrize("mode", list(PackingMode))
@pytest.mark.parametrize("r", [2, 3])
def test_tiling_and_packing_boundaries_agree(r, mode):
    net, t = tiled(f"hyp7({r})")
    p = layout(net, pack_radii(net, mode))
    corr = compare_boundaries(net, t, p)
    assert len(corr.triples) == len(net.absorbing)
    assert corr.modulus >= 1.0


@pytest.mark.slow
@pytest.mark.parametrize("mode", list(PackingMode))
@pytest.mark.parametrize("r", [4, 5])
def test_deep_tiling_and_packing_boundaries_agree(r, mode):
    net, t = tiled(f"hyp7({r})")
    p = layout(net, pack_radii(net, mode))
    corr = compare_boundaries(net, t, p)
    assert len(corr.triples) == len(net.absorbing)
