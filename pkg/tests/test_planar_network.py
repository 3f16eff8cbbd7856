import numpy as np
import pytest

from services.atlas.app.core.exceptions import (
    BadInvolution,
    NonPositiveConductance,
    NotConnected,
    RootAbsorbing,
    SizeCap,
    UsageError,
)
from services.atlas.app.schemas.graph import GraphDocument
from tests.conftest import network
from workers.network.generators import generate, parse_family
from workers.network.planar_network import build_network, degree_bound, network_to_document


def test_series_is_a_path_with_one_face(series2):
    assert (series2.n_vertices, series2.n_edges) == (3, 2)
    assert len(series2.faces) == 1
    assert len(series2.faces.cycles[0]) == 4  # both edges, both directions
    assert series2.faces.inner == []


def test_parallel_sizes(parallel22):
    assert (parallel22.n_vertices, parallel22.n_edges) == (4, 4)
    assert sorted(parallel22.neighbors(0)) == [1, 2]


def test_k4_faces(k4net):
    fl = k4net.faces
    assert len(fl) == 4
    assert all(len(c) == 3 for c in fl.cycles)
    assert sorted(k4net.outer_cycle()) == [1, 2, 3]
    assert k4net.interior_vertices().tolist() == [0]


def test_hyp7_flower():
    net = network("hyp7(1)")
    assert (net.n_vertices, net.n_edges) == (8, 14)
    assert len(net.faces.inner) == 7
    assert net.is_triangulation


@pytest.mark.parametrize("r", [2, 3, 4])
def test_hyp7_euler_and_triangles(r):
    net = network(f"hyp7({r})")
    fl = net.faces
    assert net.n_vertices - net.n_edges + len(fl) == 2
    assert len(fl.inner) == net.n_edges - net.n_vertices + 1
    assert all(len(fl.cycles[f]) == 3 for f in fl.inner)


def test_hyp7_ids_shared_across_radii():
    small, big = network("hyp7(2)"), network("hyp7(3)")
    for v in range(8):
        assert set(small.neighbors(v)) <= set(big.neighbors(v))


def test_degree_bound(series2):
    assert degree_bound(series2) == 2
    assert degree_bound(network("hyp7(3)")) == 7
    doc = network_to_document(series2).model_copy(update={"conductances": [4.0, 1.0]})
    assert degree_bound(build_network(doc)) == 4


def test_document_round_trip(series2):
    doc = network_to_document(series2)
    again = network_to_document(build_network(doc))
    assert again == doc


def test_zero_conductance_rejected(series2):
    doc = network_to_document(series2).model_copy(update={"conductances": [0.0, 1.0]})
    with pytest.raises(NonPositiveConductance):
        build_network(doc)


def test_root_absorbing_rejected(series2):
    doc = network_to_document(series2).model_copy(update={"absorbing": [0, 2]})
    with pytest.raises(RootAbsorbing):
        build_network(doc)


def test_bad_involution_rejected():
    doc = GraphDocument(
        vertices=2, darts=[(0, 0)], rotations=[[0], [1]], conductances=[1.0], root=0,
        absorbing=[1],
    )
    with pytest.raises(BadInvolution):
        build_network(doc)


def test_disconnected_rejected():
    doc = GraphDocument(
        vertices=4,
        darts=[(0, 1), (2, 3)],
        rotations=[[0], [1], [2], [3]],
        conductances=[1.0, 1.0],
        root=0,
        absorbing=[1],
    )
    with pytest.raises(NotConnected):
        build_network(doc)


def test_family_strings():
    assert parse_family("hyp7(4)") == ("hyp7", (4,))
    assert parse_family("parallel(2, 2)") == ("parallel", (2, 2))
    assert parse_family("k4") == ("k4", ())
    with pytest.raises(UsageError):
        parse_family("torus(3)")
    with pytest.raises(UsageError):
        generate("series(0)")
    with pytest.raises(SizeCap):
        generate("hyp7(99)")


def test_distances_and_ball(series2):
    assert series2.distances_from(0).tolist() == [0, 1, 2]
    assert series2.ball(0, 1).tolist() == [0, 1]
    assert np.array_equal(series2.distance_matrix, series2.distance_matrix.T)
