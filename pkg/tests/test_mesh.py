import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stdgocp.mesh import BOUNDARY, build_mesh, build_uniform_mesh, classify_edges


def test_two_by_two_counts():
    m = build_uniform_mesh(2)
    assert (m.n_vertices, m.n_edges, m.n_triangles) == (9, 16, 8)
    assert len(m.boundary_edges) == 8
    assert len(m.interior_edges) == 8
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-15)


def test_single_square():
    m = build_uniform_mesh(1)
    assert m.n_triangles == 2 and m.n_edges == 5
    assert m.h == pytest.approx(np.sqrt(2))


def test_invalid_resolution():
    with pytest.raises(ValueError):
        build_uniform_mesh(0)
    with pytest.raises(ValueError):
        build_uniform_mesh(2.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 9))
def test_mesh_invariants(n):
    m = build_uniform_mesh(n)
    assert m.n_triangles == 2 * n * n
    assert np.all(m.areas > 0)                     # counter-clockwise
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-13)
    # Euler characteristic of a disc
    assert m.n_vertices - m.n_edges + m.n_triangles == 1
    assert np.allclose(np.linalg.norm(m.edge_normal, axis=1), 1.0)
    # the owner normal points away from the owner centroid
    cent = m.vertices[m.triangles].mean(axis=1)
    assert np.all(np.einsum("ed,ed->e", m.edge_normal, m.edge_midpoints - cent[m.edge_owner]) > 0)
    inner = m.interior_edges
    assert np.all(np.einsum("ed,ed->e", m.edge_normal[inner],
                            m.edge_midpoints[inner] - cent[m.edge_neighbor[inner]]) < 0)
    # each triangle sees its three edges exactly once
    counts = np.bincount(m.element_edges.ravel(), minlength=m.n_edges)
    assert np.all(counts[m.boundary_edges] == 1) and np.all(counts[inner] == 2)
    # boundary edges lie on the boundary
    mid = m.edge_midpoints[m.boundary_edges]
    assert np.all(np.any(np.isclose(mid, 0) | np.isclose(mid, 1), axis=1))


def test_classification_diagonal_velocity():
    m = build_uniform_mesh(2)
    c = classify_edges(m, (0.5, 0.5))
    b = m.boundary_edges
    mid = m.edge_midpoints[b]
    expect = np.isclose(mid[:, 0], 0) | np.isclose(mid[:, 1], 0)
    assert np.array_equal(c.boundary_inflow[b], expect)
    assert not c.boundary_inflow[m.interior_edges].any()


def test_tangential_flow_is_outflow():
    m = build_uniform_mesh(1)
    c = classify_edges(m, (1.0, 0.0))
    horizontal = np.isclose(m.edge_normal[:, 0], 0.0)
    assert not c.owner_inflow[horizontal].any() and not c.neighbor_inflow[horizontal].any()


def test_each_interior_edge_inflow_for_exactly_one_side():
    m = build_uniform_mesh(3)
    c = classify_edges(m, (0.3, -0.8))
    i = m.interior_edges
    assert np.all(c.owner_inflow[i] ^ c.neighbor_inflow[i])
    total = c.element_inflow.sum()
    assert total == len(i) + c.boundary_inflow.sum()


def test_callable_velocity_matches_constant():
    m = build_uniform_mesh(3)
    a = classify_edges(m, (0.5, 0.5))
    b = classify_edges(m, lambda x, y: (0.5 + 0 * x, 0.5 + 0 * y))
    assert np.array_equal(a.element_inflow, b.element_inflow)


def test_build_mesh_from_list_and_dump(tmp_path):
    m = build_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    assert m.n_edges == 3 and np.all(m.edge_neighbor == BOUNDARY)
    path = tmp_path / "mesh.txt"
    m.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("v ") and lines[-1] == "t 0 1 2"
