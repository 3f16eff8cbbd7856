import numpy as np
import pytest

from services.atlas.app.core.exceptions import NotTriangulation
from tests.conftest import network
from workers.martin.martin_boundary import compare_cyclic_orders
from workers.packing.circle_packing import (
    CirclePacking,
    PackingMode,
    align_by_rotation,
    boundary_angles,
    flower_angle_sum,
    layout,
    pack_radii,
    packing_checks,
    packing_from_document,
    packing_to_document,
    sum_of_squares_check,
)
from workers.render.svg_render import render_packing_svg

K4_RATIO = 2 / np.sqrt(3) - 1
EUC = PackingMode.EUCLIDEAN
HYP = PackingMode.HYPERBOLIC


def test_hexagonal_flower():
    assert flower_angle_sum(1.0, [1.0] * 6, EUC) == pytest.approx(2 * np.pi)
    assert flower_angle_sum(1.0, [1.0] * 5, "euclidean_fixed_boundary") == pytest.approx(
        5 * np.pi / 3
    )


def test_k4_euclidean_radius(k4net):
    radii = pack_radii(k4net, EUC)
    assert radii.label[0] == pytest.approx(K4_RATIO, abs=1e-8)
    assert radii.label[1:].tolist() == [1.0, 1.0, 1.0]
    assert radii.residual < 1e-8


def test_k4_euclidean_layout(k4net):
    p = layout(k4net, pack_radii(k4net, EUC))
    r0, r1 = p.radius[0], p.radius[1]
    assert r0 / r1 == pytest.approx(K4_RATIO, abs=1e-8)
    for u in (1, 2, 3):
        assert np.linalg.norm(p.center[u] - p.center[0]) == pytest.approx(r0 + r1, abs=1e-8)
        for w in (1, 2, 3):
            if u < w:
                assert np.linalg.norm(p.center[u] - p.center[w]) == pytest.approx(2 * r1)
    angles = sorted(a for _, a in boundary_angles(p))
    gaps = np.diff(angles + [angles[0] + 2 * np.pi])
    assert gaps == pytest.approx([2 * np.pi / 3] * 3, abs=1e-8)
    assert sum_of_squares_check(p) < 1.0


def test_k4_superstep(k4net):
    radii = pack_radii(k4net, EUC, superstep=True)
    assert radii.label[0] == pytest.approx(K4_RATIO, abs=1e-8)


def test_triangle_fixture():
    net = network("triangle")
    p = layout(net, pack_radii(net, EUC))
    r = p.radius
    assert r == pytest.approx([r[0]] * 3)
    for u, w in ((0, 1), (1, 2), (0, 2)):
        assert np.linalg.norm(p.center[u] - p.center[w]) == pytest.approx(2 * r[0])
    hyp = layout(net, pack_radii(net, HYP))
    assert hyp.tangency_residual < 1e-9
    assert len(boundary_angles(hyp)) == 3


@pytest.mark.parametrize("r", [2, 3, 4])
def test_hyp7_maximal_packing(r):
    net = network(f"hyp7({r})")
    radii = pack_radii(net, HYP)
    assert radii.residual < 1e-8
    assert radii.history[-1] < radii.history[0]
    p = layout(net, radii)
    report = packing_checks(net, p)
    assert report.tangency_residual < 1e-6
    assert report.sum_of_squares <= 1.0
    assert report.passed


@pytest.mark.slow
def test_hyp7_5_maximal_packing():
    net = network("hyp7(5)")
    p = layout(net, pack_radii(net, HYP))
    assert p.angle_residual < 1e-8
    assert packing_checks(net, p).passed


def test_hyp7_euclidean_packing():
    net = network("hyp7(3)")
    p = layout(net, pack_radii(net, EUC))
    assert packing_checks(net, p).passed


def test_boundary_order_follows_outer_cycle():
    net = network("hyp7(2)")
    p = layout(net, pack_radii(net, HYP))
    position = {v: float(i) for i, v in enumerate(p.boundary)}
    angle = dict(boundary_angles(p))
    order, _ = compare_cyclic_orders(position, angle)
    assert sorted(order) == sorted(net.outer_cycle())


def test_layout_rotation_freedom(k4net):
    radii = pack_radii(k4net, EUC)
    p = layout(k4net, radii)
    q = layout(k4net, radii, first_dart=k4net.darts_at(0)[1])
    assert align_by_rotation(p, q) < 1e-8


def test_unit_circle_sum_of_squares():
    p = CirclePacking(mode=EUC, center=np.zeros((1, 2)), radius=np.ones(1), boundary=(0,))
    assert sum_of_squares_check(p) == 1.0


def test_not_a_triangulation():
    with pytest.raises(NotTriangulation):
        pack_radii(network("grid(3,3)"), HYP)


def test_document_and_render(tmp_path, k4net):
    p = layout(k4net, pack_radii(k4net, HYP))
    q = packing_from_document(packing_to_document(p))
    assert np.allclose(q.center, p.center) and np.allclose(q.radius, p.radius)
    svg = render_packing_svg(p, tmp_path / "k4.svg", edges=True)
    assert svg.read_text().count("<circle") == 1 + k4net.n_vertices
