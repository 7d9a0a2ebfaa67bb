"""Discontinuous piecewise-linear space with nodal basis and quadrature."""

from __future__ import annotations

import csv

import numpy as np

from .mesh import BOUNDARY, Mesh

# Radon's 7-point rule on the reference triangle, exact for degree 5.
_S15 = np.sqrt(15.0)
_A, _B = (6.0 - _S15) / 21.0, (6.0 + _S15) / 21.0
TRIANGLE_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A, _A, 1 - 2 * _A],
    [_A, 1 - 2 * _A, _A],
    [1 - 2 * _A, _A, _A],
    [_B, _B, 1 - 2 * _B],
    [_B, 1 - 2 * _B, _B],
    [1 - 2 * _B, _B, _B],
])
TRIANGLE_WEIGHTS = np.array([9 / 40] + [(155 - _S15) / 1200] * 3 + [(155 + _S15) / 1200] * 3)

# 3-point Gauss rule on [0, 1], exact for degree 5.
_g, _w = np.polynomial.legendre.leggauss(3)
EDGE_POINTS = 0.5 * (_g + 1.0)
EDGE_WEIGHTS = 0.5 * _w  # fractions of the edge length

_LOCAL_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0
_LOCAL_MASS_INV = 3.0 * (4.0 * np.eye(3) - np.ones((3, 3)))


class DgSpace:
    """Elementwise P1 space: DOFs ``3K, 3K+1, 3K+2`` are the values of the
    local field at the vertices of triangle ``K``."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.ndof = 3 * mesh.n_triangles
        self.dofs = np.arange(self.ndof).reshape(-1, 3)

        p = mesh.vertices[mesh.triangles]                   # (nt, 3, 2)
        self.areas = mesh.areas
        self.corners = p
        # gradients of barycentric coordinates: grad(lambda_i) = rot(p_{i+2} - p_{i+1}) / (2 |K|)
        opp = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
        self.grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / (2.0 * self.areas[:, None, None])

        self.qp = np.einsum("qi,tid->tqd", TRIANGLE_BARY, p)   # (nt, nq, 2)
        self.qw = self.areas[:, None] * TRIANGLE_WEIGHTS[None, :]
        self.qphi = TRIANGLE_BARY                              # (nq, 3)

        ev = mesh.vertices[mesh.edge_vertices]                 # (ne, 2, 2)
        s = EDGE_POINTS[None, :, None]
        self.eqp = ev[:, :1] * (1.0 - s) + ev[:, 1:] * s       # (ne, ng, 2)
        self.eqw = mesh.edge_length[:, None] * EDGE_WEIGHTS[None, :]
        self.ephi_owner = self.barycentric(mesh.edge_owner, self.eqp)
        nb = np.where(mesh.edge_neighbor == BOUNDARY, mesh.edge_owner, mesh.edge_neighbor)
        self.ephi_neighbor = self.barycentric(nb, self.eqp)

    def barycentric(self, elements, points) -> np.ndarray:
        """Barycentric coordinates of ``points`` in ``elements``.

        ``points`` has shape ``elements.shape + (2,)`` for one point per
        element or ``elements.shape + (nq, 2)`` for several.
        """
        elements = np.asarray(elements)
        points = np.asarray(points, dtype=float)
        single = points.ndim == elements.ndim + 1
        if single:
            points = points[..., None, :]
        p0 = self.corners[elements][..., None, 0, :]
        lam = np.einsum("...qd,...id->...qi", points - p0, self.grads[elements])
        lam[..., 0] += 1.0
        return lam[..., 0, :] if single else lam

    def zeros(self) -> np.ndarray:
        return np.zeros(self.ndof)

    def interpolate(self, g, t: float = 0.0) -> np.ndarray:
        """Vertex values of ``g(x1, x2, t)`` element by element."""
        p = self.corners
        return np.asarray(g(p[..., 0], p[..., 1], t), dtype=float).ravel() * np.ones(self.ndof)

    def evaluate(self, v: np.ndarray, element: int, point) -> float:
        lam = self.barycentric(element, np.asarray(point, dtype=float))
        if np.any(lam < -1e-12) or np.any(lam > 1 + 1e-12):
            raise ValueError(f"point {tuple(point)} is outside element {element}")
        return float(lam @ v[self.dofs[element]])

    def values_at_quadrature(self, v: np.ndarray) -> np.ndarray:
        """Field values at the volume quadrature points, shape (nt, nq)."""
        return v[self.dofs] @ self.qphi.T

    def sample(self, g, t: float) -> np.ndarray:
        p = self.qp
        return np.asarray(g(p[..., 0], p[..., 1], t), dtype=float) * np.ones(p.shape[:2])

    def l2_project(self, g, t: float = 0.0) -> np.ndarray:
        rhs = np.einsum("tq,tq,qi->ti", self.qw, self.sample(g, t), self.qphi)
        local = rhs @ _LOCAL_MASS_INV.T / self.areas[:, None]
        return local.ravel()

    def l2_error(self, v: np.ndarray, g, t: float) -> float:
        """Quadrature approximation of ``||v_h - g(., t)||_{L2}``."""
        diff = self.values_at_quadrature(v) - self.sample(g, t)
        return float(np.sqrt(np.sum(self.qw * diff * diff)))

    def export_field(self, path, v: np.ndarray) -> None:
        """CSV with one row per (element, vertex): ``element,vertex,value``."""
        tri = self.mesh.triangles
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["element", "vertex", "value"])
            for k in range(self.mesh.n_triangles):
                for i in range(3):
                    w.writerow([k, int(tri[k, i]), repr(float(v[3 * k + i]))])


def l2_norm(M, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    if M.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {M.shape}, vector {v.shape}")
    return float(np.sqrt(max(v @ (M @ v), 0.0)))


local_mass = _LOCAL_MASS
