import pytest

from services.atlas.app.core.exceptions import UsageError
from tests.conftest import network, tiled
from workers.martin.interpolation import packing_interpolate_path, tiling_interpolate_path
from workers.packing.circle_packing import PackingMode, layout, pack_radii


def test_parallel_tiling_path(parallel22):
    _, t = tiled("parallel(2,2)")
    path = tiling_interpolate_path(parallel22, t, [1, 2], seed=3)
    assert path.is_path(parallel22)
    assert path.vertices[0] == 1 and path.vertices[-1] == 2
    assert path.attempts >= 1


def test_existing_path_is_kept():
    net, t = tiled("hyp7(2)")
    a = net.neighbors(net.root)[0]
    b = next(v for v in net.neighbors(a) if v in net.absorbing)
    path = tiling_interpolate_path(net, t, [net.root, a, b])
    assert path.is_path(net)
    assert {net.root, a, b} <= set(path.vertices)


def test_close_boundary_vertices_stay_high():
    net, t = tiled("hyp7(4)")
    cycle = net.outer_cycle()
    path = tiling_interpolate_path(net, t, cycle[:2], seed=1)
    assert path.is_path(net)
    assert isinstance(path.lower_height_slack, float)


def test_k4_packing_path(k4net):
    p = layout(k4net, pack_radii(k4net, PackingMode.HYPERBOLIC))
    path = packing_interpolate_path(k4net, p, [1, 3])
    assert path.is_path(k4net)
    assert path.lower_height_slack is None


def test_far_packing_path_crosses_circles():
    net = network("hyp7(3)")
    p = layout(net, pack_radii(net, PackingMode.HYPERBOLIC))
    cycle = net.outer_cycle()
    path = packing_interpolate_path(net, p, [cycle[0], cycle[len(cycle) // 2]], seed=5)
    assert path.is_path(net)
    assert path.cells
    assert set(path.cells) <= set(path.vertices)


def test_empty_vertex_list(series2):
    _, t = tiled("series(2)")
    with pytest.raises(UsageError):
        tiling_interpolate_path(series2, t, [])
