from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stdgocp.assembly import assemble_mass
from stdgocp.dg_space import TRIANGLE_BARY, TRIANGLE_WEIGHTS, DgSpace, l2_norm, local_mass
from stdgocp.mesh import build_mesh, build_uniform_mesh


@pytest.fixture(scope="module")
def space4():
    return DgSpace(build_uniform_mesh(4))


def test_local_mass_reference():
    expect = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 12.0
    assert np.allclose(local_mass, expect, atol=1e-15)


def test_single_element_mass_scaled_by_area():
    space = DgSpace(build_mesh([[0, 0], [2, 0], [0, 1]], [[0, 1, 2]]))
    M = assemble_mass(space).toarray()
    assert np.allclose(M, 1.0 / 12 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]), atol=1e-15)


@pytest.mark.parametrize("a,b", [(a, b) for a in range(6) for b in range(6) if a + b <= 5])
def test_volume_rule_exact_to_degree_five(a, b):
    # reference triangle (0,0), (1,0), (0,1): int x^a y^b = a! b! / (a+b+2)!
    x = TRIANGLE_BARY[:, 1]
    y = TRIANGLE_BARY[:, 2]
    approx = 0.5 * TRIANGLE_WEIGHTS @ (x**a * y**b)
    assert approx == pytest.approx(factorial(a) * factorial(b) / factorial(a + b + 2), rel=1e-14)


def test_weights_sum_to_one():
    assert TRIANGLE_WEIGHTS.sum() == pytest.approx(1.0, abs=1e-16)


def test_norm_of_linear_function(space4):
    M = assemble_mass(space4)
    v = space4.interpolate(lambda x1, x2, t: 2 * x1)
    assert l2_norm(M, v) == pytest.approx(2 / np.sqrt(3), rel=1e-13)


def test_norm_dimension_mismatch(space4):
    with pytest.raises(ValueError):
        l2_norm(assemble_mass(space4), np.ones(5))


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_projection_reproduces_affine(space4, c0, c1, c2):
    g = lambda x1, x2, t: c0 + c1 * x1 + c2 * x2
    assert np.allclose(space4.l2_project(g), space4.interpolate(g), atol=1e-12)
    assert space4.l2_error(space4.l2_project(g), g, 0.0) < 1e-12


def test_projection_is_orthogonal(space4):
    g = lambda x1, x2, t: np.sin(3 * x1) * np.exp(x2)
    v = space4.l2_project(g)
    M = assemble_mass(space4)
    from stdgocp.assembly import assemble_load
    # M v equals the load vector of g
    assert np.allclose(M @ v, assemble_load(space4, g), atol=1e-14)


def test_projection_error_second_order():
    g = lambda x1, x2, t: np.sin(2 * np.pi * x1) * np.sin(2 * np.pi * x2)
    e = [DgSpace(build_uniform_mesh(n)).l2_error(DgSpace(build_uniform_mesh(n)).l2_project(g), g, 0.0)
         for n in (8, 16)]
    assert np.log2(e[0] / e[1]) == pytest.approx(2.0, abs=0.1)


def test_evaluate_and_outside(space4):
    v = space4.interpolate(lambda x1, x2, t: 1 + x1 - 2 * x2)
    K = 5
    pt = space4.corners[K].mean(axis=0)
    assert space4.evaluate(v, K, pt) == pytest.approx(1 + pt[0] - 2 * pt[1])
    with pytest.raises(ValueError):
        space4.evaluate(v, K, (5.0, 5.0))


def test_barycentric_partition_of_unity(space4):
    lam = space4.barycentric(np.arange(space4.mesh.n_triangles), space4.qp)
    assert np.allclose(lam.sum(axis=-1), 1.0)
    assert np.allclose(lam, space4.qphi[None])


def test_export_field(space4, tmp_path):
    path = tmp_path / "y.csv"
    space4.export_field(path, np.arange(space4.ndof, dtype=float))
    lines = path.read_text().splitlines()
    assert lines[0] == "element,vertex,value"
    assert len(lines) == space4.ndof + 1
