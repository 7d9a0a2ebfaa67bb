"""Mass matrix, SIPG state/adjoint operators with upwinding, and load vectors.

Matrix convention: ``A[i, j] = a(phi_j, phi_i)`` (rows are tests, columns
trials), so that ``A @ y`` is the coefficient vector of ``a(y_h, .)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dg_space import DgSpace, local_mass
from .mesh import BOUNDARY, EdgeClassification, classify_edges, velocity_at

DEFAULT_SIGMA = 6.0


@dataclass(frozen=True)
class SipgParams:
    """Coefficients of the diffusion-convection-reaction operator.

    ``beta`` and ``r`` may be constants or callables of ``(x1, x2)``; a
    callable ``beta`` returns the pair of components.
    """

    eps: float
    beta: object = (0.0, 0.0)
    r: object = 0.0
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not self.eps >= 0.0:
            raise ValueError(f"diffusion coefficient must be nonnegative, got {self.eps}")
        if not self.sigma > 0.0:
            raise ValueError(f"penalty parameter must be positive, got sigma={self.sigma}")
        if not callable(self.r) and not callable(self.beta) and self.c0 < 0.0:
            raise ValueError(f"r - div(beta)/2 = {self.c0} < 0: problem is not well posed")

    @property
    def c0(self) -> float:
        # constant beta is divergence free
        return float(self.r)


@dataclass(frozen=True)
class SipgOperators:
    M: sp.csr_matrix
    A_s: sp.csr_matrix
    A_a: sp.csr_matrix

    @property
    def ndof(self) -> int:
        return self.M.shape[0]


def _coefficient(c, points: np.ndarray) -> np.ndarray:
    if callable(c):
        return np.asarray(c(points[..., 0], points[..., 1]), dtype=float) * np.ones(points.shape[:-1])
    return np.full(points.shape[:-1], float(c))


class _Accumulator:
    """Collects local blocks as COO triplets; summation order is fixed."""

    def __init__(self, n: int):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []

    def add(self, test_dofs: np.ndarray, trial_dofs: np.ndarray, blocks: np.ndarray):
        # blocks: (m, 3, 3) with blocks[e, i, j] = a(phi_trial_j, phi_test_i)
        self.rows.append(np.repeat(test_dofs[:, :, None], 3, axis=2).ravel())
        self.cols.append(np.repeat(trial_dofs[:, None, :], 3, axis=1).ravel())
        self.vals.append(blocks.ravel())

    def tocsr(self) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((self.n, self.n))
        A = sp.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n, self.n),
        ).tocsr()
        A.sum_duplicates()
        A.sort_indices()
        return A


def assemble_mass(space: DgSpace) -> sp.csr_matrix:
    acc = _Accumulator(space.ndof)
    blocks = space.areas[:, None, None] * local_mass[None]
    acc.add(space.dofs, space.dofs, blocks)
    return acc.tocsr()


def _edge_dofs(space: DgSpace):
    mesh = space.mesh
    nb = np.where(mesh.edge_neighbor == BOUNDARY, mesh.edge_owner, mesh.edge_neighbor)
    return space.dofs[mesh.edge_owner], space.dofs[nb]


def _diffusion(space: DgSpace, params: SipgParams, acc: _Accumulator):
    """Volume and edge terms of the SIPG diffusion form (symmetric)."""
    mesh = space.mesh
    eps = params.eps
    G = space.grads
    vol = eps * space.areas[:, None, None] * np.einsum("tid,tjd->tij", G, G)
    acc.add(space.dofs, space.dofs, vol)

    n = mesh.edge_normal
    w = space.eqw
    dK, de = _edge_dofs(space)
    gK = np.einsum("eid,ed->ei", G[mesh.edge_owner], n)
    nb = np.where(mesh.edge_neighbor == BOUNDARY, mesh.edge_owner, mesh.edge_neighbor)
    ge = np.einsum("eid,ed->ei", G[nb], n)
    interior = mesh.edge_neighbor != BOUNDARY
    avg = np.where(interior, 0.5, 1.0)
    pen = params.sigma * eps / mesh.edge_length

    # side data: (dofs, basis values on edge, normal derivative, jump sign)
    sides = [(dK, space.ephi_owner, gK, 1.0), (de, space.ephi_neighbor, ge, -1.0)]
    for b, (dofs_b, phi_b, g_b, s_b) in enumerate(sides):
        for a, (dofs_a, phi_a, g_a, s_a) in enumerate(sides):
            mask = np.ones(mesh.n_edges, dtype=bool) if a == b == 0 else interior
            int_b = np.einsum("eq,eqi->ei", w, phi_b)          # int phi_i^b
            int_a = np.einsum("eq,eqj->ej", w, phi_a)
            mass_ba = np.einsum("eq,eqi,eqj->eij", w, phi_b, phi_a)
            blk = (
                -avg[:, None, None] * eps * s_b * int_b[:, :, None] * g_a[:, None, :]
                - avg[:, None, None] * eps * s_a * g_b[:, :, None] * int_a[:, None, :]
                + (pen * s_a * s_b)[:, None, None] * mass_ba
            )
            acc.add(dofs_b[mask], dofs_a[mask], blk[mask])


def _volume_lower_order(space: DgSpace, params: SipgParams, acc: _Accumulator, sign: float):
    """``sign * beta . grad(trial) * test + r * trial * test`` over elements."""
    bq = velocity_at(params.beta, space.qp)                      # (nt, nq, 2)
    bgrad = np.einsum("tqd,tjd->tqj", bq, space.grads)            # beta . grad(phi_j)
    rq = _coefficient(params.r, space.qp)
    phi = space.qphi
    blk = np.einsum("tq,qi,tqj->tij", space.qw, phi, sign * bgrad + rq[:, :, None] * phi[None])
    acc.add(space.dofs, space.dofs, blk)


def _edge_flux(space: DgSpace, params: SipgParams) -> np.ndarray:
    bq = velocity_at(params.beta, space.eqp)
    return np.einsum("eqd,ed->eq", bq, space.mesh.edge_normal)   # beta . n_K (owner)


def _edge_block(w, bn, phi_test, phi_trial, coeff=1.0):
    return coeff * np.einsum("eq,eq,eqi,eqj->eij", w, bn, phi_test, phi_trial)


def assemble_state_operator(space: DgSpace, params: SipgParams,
                            classification: EdgeClassification | None = None) -> sp.csr_matrix:
    """Matrix of the SIPG form with upwind convection."""
    mesh = space.mesh
    if classification is None:
        classification = classify_edges(mesh, params.beta)
    acc = _Accumulator(space.ndof)
    _diffusion(space, params, acc)
    _volume_lower_order(space, params, acc, 1.0)

    w = space.eqw
    bn = _edge_flux(space, params)
    dK, de = _edge_dofs(space)
    pK, pe = space.ephi_owner, space.ephi_neighbor
    interior = mesh.edge_neighbor != BOUNDARY

    # E in dK^- of the owner: int beta.n (y_e - y_K) v_K
    m = interior & classification.owner_inflow
    acc.add(dK[m], de[m], _edge_block(w[m], bn[m], pK[m], pe[m]))
    acc.add(dK[m], dK[m], _edge_block(w[m], bn[m], pK[m], pK[m], -1.0))
    # E in dK^- of the neighbor (its normal is -n): int (-beta.n) (y_K - y_e) v_e
    m = interior & classification.neighbor_inflow
    acc.add(de[m], dK[m], _edge_block(w[m], bn[m], pe[m], pK[m], -1.0))
    acc.add(de[m], de[m], _edge_block(w[m], bn[m], pe[m], pe[m]))
    # inflow boundary: - int beta.n y v
    m = classification.boundary_inflow
    acc.add(dK[m], dK[m], _edge_block(w[m], bn[m], pK[m], pK[m], -1.0))
    return acc.tocsr()


def assemble_adjoint_operator(space: DgSpace, params: SipgParams,
                              classification: EdgeClassification | None = None) -> sp.csr_matrix:
    """Matrix of the adjoint form; convection is downwinded on outflow edges."""
    mesh = space.mesh
    if classification is None:
        classification = classify_edges(mesh, params.beta)
    acc = _Accumulator(space.ndof)
    _diffusion(space, params, acc)
    _volume_lower_order(space, params, acc, -1.0)

    w = space.eqw
    bn = _edge_flux(space, params)
    dK, de = _edge_dofs(space)
    pK, pe = space.ephi_owner, space.ephi_neighbor
    interior = mesh.edge_neighbor != BOUNDARY
    boundary = ~interior

    # E in dK^+ of the owner: - int beta.n (p_e - p_K) psi_K
    m = interior & ~classification.owner_inflow
    acc.add(dK[m], de[m], _edge_block(w[m], bn[m], pK[m], pe[m], -1.0))
    acc.add(dK[m], dK[m], _edge_block(w[m], bn[m], pK[m], pK[m]))
    # E in dK^+ of the neighbor: - int (-beta.n) (p_K - p_e) psi_e
    m = interior & ~classification.neighbor_inflow
    acc.add(de[m], dK[m], _edge_block(w[m], bn[m], pe[m], pK[m]))
    acc.add(de[m], de[m], _edge_block(w[m], bn[m], pe[m], pe[m], -1.0))
    # outflow boundary: + int beta.n p psi
    m = boundary & ~classification.boundary_inflow
    acc.add(dK[m], dK[m], _edge_block(w[m], bn[m], pK[m], pK[m]))
    return acc.tocsr()


def assemble_operators(space: DgSpace, params: SipgParams) -> SipgOperators:
    cls = classify_edges(space.mesh, params.beta)
    return SipgOperators(
        M=assemble_mass(space),
        A_s=assemble_state_operator(space, params, cls),
        A_a=assemble_adjoint_operator(space, params, cls),
    )


def assemble_load(space: DgSpace, g, t: float = 0.0) -> np.ndarray:
    """Vector of ``int g(., t) phi_i`` by volume quadrature."""
    return np.einsum("tq,tq,qi->ti", space.qw, space.sample(g, t), space.qphi).ravel()


def penalty_energy(space: DgSpace, v: np.ndarray) -> float:
    """``sum_E int [v].[v] / h_E`` over interior edges (the jump seminorm, unscaled)."""
    mesh = space.mesh
    dK, de = _edge_dofs(space)
    jump = np.einsum("eqi,ei->eq", space.ephi_owner, v[dK]) - np.einsum("eqi,ei->eq", space.ephi_neighbor, v[de])
    interior = mesh.edge_neighbor != BOUNDARY
    return float(np.sum((space.eqw * jump**2)[interior] / mesh.edge_length[interior, None]))


def dump_matrix(path, A) -> None:
    """Coordinate text dump, one ``i j value`` line per stored entry."""
    A = sp.coo_matrix(A)
    with open(path, "w") as fh:
        for i, j, v in zip(A.row, A.col, A.data):
            fh.write(f"{i} {j} {v:.17g}\n")
