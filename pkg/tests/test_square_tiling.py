from dataclasses import replace

import numpy as np
import pytest

from tests.conftest import tiled
from workers.potential.harmonic import solve_escape
from workers.render.svg_render import render_tiling_svg
from workers.tiling.square_tiling import (
    arc_overlap,
    build_tiling,
    check_tiling,
    harmonic_measure_defect,
    merge_arcs,
    rotate_tiling,
    tiling_to_document,
    tilings_equal_up_to_rotation,
    vertex_interval,
    wrap,
)

TOL = 1e-9


# ---------- arcs ----------
def test_wrap_and_overlap():
    assert wrap(0.9, 1.0) == pytest.approx(-0.1)
    assert arc_overlap(0.9, 0.2, 0.0, 0.5, 1.0) == pytest.approx(0.1)
    assert arc_overlap(0.2, 0.2, 0.5, 0.5, 1.0) == pytest.approx(0.0)


def test_merge_arcs():
    assert merge_arcs(np.array([0.5, 0.0]), np.array([0.5, 0.5]), 1.0, 1e-12) == (0.0, 1.0)
    start, length = merge_arcs(np.array([0.9, 0.0]), np.array([0.1, 0.2]), 1.0, 1e-12)
    assert (start, length) == pytest.approx((0.9, 0.3))
    assert merge_arcs(np.array([0.0, 0.5]), np.array([0.1, 0.1]), 1.0, 1e-12) is None


# ---------- oracles ----------
def test_series_two_stacked_rectangles(series2):
    _, t = tiled("series(2)")
    assert t.eta == pytest.approx(0.5, abs=TOL)
    heights = sorted(v for r in t.rects for v in (r.y_lo, r.y_hi))
    assert heights == pytest.approx([0.0, 0.5, 0.5, 1.0], abs=TOL)
    assert [r.width for r in t.rects] == pytest.approx([0.5, 0.5], abs=TOL)
    report = check_tiling(t, series2)
    assert report.passed
    assert report.area_defect < 1e-10


def test_parallel_four_squares(parallel22):
    _, t = tiled("parallel(2,2)")
    assert t.eta == pytest.approx(1.0, abs=TOL)
    for r in t.rects:
        assert r.width == pytest.approx(0.5, abs=TOL)
        assert r.height == pytest.approx(0.5, abs=TOL)
    sa, la = vertex_interval(t, 1)
    sb, lb = vertex_interval(t, 2)
    assert la == pytest.approx(0.5, abs=TOL) and lb == pytest.approx(0.5, abs=TOL)
    assert abs(wrap(sa - sb, 1.0)) == pytest.approx(0.5, abs=TOL)
    assert check_tiling(t, parallel22).passed


def test_vertex_intervals(series2):
    _, t = tiled("series(2)")
    assert vertex_interval(t, 1)[1] == pytest.approx(0.5, abs=TOL)
    assert vertex_interval(t, series2.root)[1] == pytest.approx(t.eta, abs=TOL)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_hyp7_tiling_invariants(r):
    net, t = tiled(f"hyp7({r})")
    report = check_tiling(t, net)
    assert report.passed, report
    assert report.bound_ratio_m2 is not None


@pytest.mark.slow
@pytest.mark.parametrize("r", [5, 6])
def test_hyp7_tiling_invariants_deep(r):
    net, t = tiled(f"hyp7({r})")
    assert check_tiling(t, net).passed


def test_corrupted_tiling_flagged():
    net, t = tiled("hyp7(2)")
    k = int(np.argmax([r.width for r in t.rects]))
    rects = list(t.rects)
    rects[k] = replace(rects[k], width=2 * rects[k].width)
    report = check_tiling(replace(t, rects=tuple(rects)), net)
    assert not report.passed
    assert report.area_defect > 1e-3


def test_interval_lengths_match_exit_law():
    net, t = tiled("hyp7(4)")
    assert harmonic_measure_defect(net, t) < 1e-8


def test_seam_choice_is_a_rotation():
    net, t = tiled("hyp7(3)")
    other = build_tiling(net, solve_escape(net), seam_dart=net.darts_at(net.root)[3])
    assert tilings_equal_up_to_rotation(t, other)
    assert tilings_equal_up_to_rotation(t, rotate_tiling(t, 0.37 * t.eta))


def test_export_and_render(tmp_path, series2):
    _, t = tiled("series(2)")
    doc = tiling_to_document(t)
    assert len(doc.rectangles) == 2
    assert [iv.vertex for iv in doc.vertex_intervals] == [0, 1, 2]
    path = render_tiling_svg(t.eta, t.rects, tmp_path / "s.svg")
    assert path.read_text().count("<rect") >= 2
    again = render_tiling_svg(t.eta, doc.rectangles, tmp_path / "s2.svg")
    assert again.read_bytes() == path.read_bytes()
