import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import P1Oracle
from stdgocp.assembly import (SipgParams, assemble_load, assemble_mass, assemble_operators,
                              dump_matrix, penalty_energy)
from stdgocp.dg_space import DgSpace
from stdgocp.mesh import build_mesh, build_uniform_mesh

PARAMS = [
    (1e-5, (1.0, 0.0), 1.0, 6.0),
    (1e-5, (0.5, 0.5), 1.0, 6.0),
    (0.3, (0.5, -0.7), 0.2, 3.5),
    (1.0, (-1.0, 0.3), 0.0, 10.0),
]


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("eps,beta,r,sigma", PARAMS)
def test_operators_match_bruteforce_oracle(n, eps, beta, r, sigma):
    mesh = build_uniform_mesh(n)
    ops = assemble_operators(DgSpace(mesh), SipgParams(eps, beta, r, sigma))
    oracle = P1Oracle(mesh.vertices, mesh.triangles)
    assert np.max(np.abs(ops.A_s.toarray() - oracle.operator(eps, beta, r, sigma))) < 1e-12
    assert np.max(np.abs(ops.A_a.toarray() - oracle.operator(eps, beta, r, sigma, adjoint=True))) < 1e-12
    assert np.max(np.abs(ops.M.toarray() - oracle.mass())) < 1e-14


def test_unstructured_patch_matches_oracle():
    verts = [[0, 0], [1, 0], [0.4, 0.9], [1.3, 1.1], [-0.5, 0.8]]
    tris = [[0, 1, 2], [1, 3, 2], [0, 2, 4]]
    mesh = build_mesh(verts, tris)
    p = (0.05, (0.7, 0.2), 0.5, 8.0)
    ops = assemble_operators(DgSpace(mesh), SipgParams(*p))
    o = P1Oracle(verts, tris)
    assert np.max(np.abs(ops.A_s.toarray() - o.operator(*p))) < 1e-12
    assert np.max(np.abs(ops.A_a.toarray() - o.operator(*p, adjoint=True))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(n=st.sampled_from([1, 2, 4]), eps=st.floats(1e-6, 1.0), b1=st.floats(-2, 2), b2=st.floats(-2, 2),
       r=st.floats(0, 3), sigma=st.floats(3, 20))
def test_adjoint_is_transpose(n, eps, b1, b2, r, sigma):
    ops = assemble_operators(DgSpace(build_uniform_mesh(n)), SipgParams(eps, (b1, b2), r, sigma))
    scale = max(1.0, abs(ops.A_s).max())
    assert abs(ops.A_a - ops.A_s.T).max() <= 1e-14 * scale


@pytest.mark.parametrize("beta", [(1.0, 0.0), (0.5, 0.5)])
def test_coercivity_proxy(beta, rng):
    space = DgSpace(build_uniform_mesh(4))
    A = assemble_operators(space, SipgParams(1e-5, beta, 1.0, 6.0)).A_s
    M = assemble_mass(space)
    for _ in range(100):
        v = rng.standard_normal(space.ndof)
        # strictly positive with r > 0: a(v, v) >= r ||v||^2
        assert v @ (A @ v) >= (v @ (M @ v)) * (1 - 1e-12)


def test_penalty_vanishes_for_continuous_field():
    space = DgSpace(build_uniform_mesh(5))
    v = space.interpolate(lambda x1, x2, t: x1)
    assert penalty_energy(space, v) < 1e-13
    w = np.random.default_rng(1).standard_normal(space.ndof)
    assert penalty_energy(space, w) > 0


def test_matrices_sorted_csr():
    ops = assemble_operators(DgSpace(build_uniform_mesh(3)), SipgParams(0.1, (1.0, 0.0), 1.0))
    for A in (ops.M, ops.A_s, ops.A_a):
        assert A.has_sorted_indices
        A2 = A.copy()
        A2.sum_duplicates()
        assert A2.nnz == A.nnz


def test_load_of_constant_is_mass_times_one():
    space = DgSpace(build_uniform_mesh(3))
    b = assemble_load(space, lambda x1, x2, t: 2.0 + 0 * x1)
    assert np.allclose(b, assemble_mass(space) @ np.full(space.ndof, 2.0), atol=1e-15)


def test_callable_coefficients_match_constants():
    space = DgSpace(build_uniform_mesh(3))
    a = assemble_operators(space, SipgParams(0.01, (0.5, 0.5), 1.0))
    b = assemble_operators(space, SipgParams(0.01, lambda x, y: (0.5 + 0 * x, 0.5 + 0 * y),
                                             lambda x, y: 1.0 + 0 * x))
    assert abs(a.A_s - b.A_s).max() < 1e-14


@pytest.mark.parametrize("kwargs", [dict(eps=-1.0), dict(eps=1.0, sigma=0.0), dict(eps=1.0, r=-0.5)])
def test_invalid_parameters(kwargs):
    with pytest.raises(ValueError):
        SipgParams(**kwargs)


def test_dump_matrix(tmp_path):
    ops = assemble_operators(DgSpace(build_uniform_mesh(1)), SipgParams(0.1, (1.0, 0.0), 1.0))
    path = tmp_path / "A.txt"
    dump_matrix(path, ops.A_s)
    rows = np.loadtxt(path)
    A = np.zeros(ops.A_s.shape)
    A[rows[:, 0].astype(int), rows[:, 1].astype(int)] = rows[:, 2]
    assert np.array_equal(A, ops.A_s.toarray())
