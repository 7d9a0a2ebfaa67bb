"""Structured triangulations of the unit square and upwind edge classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOUNDARY = -1


@dataclass(frozen=True)
class Mesh:
    """Triangulation with edge connectivity.

    Every edge is stored once with an owner element; ``edge_normal`` is the
    unit normal of the owner, pointing towards the neighbor (or out of the
    domain for boundary edges).
    """

    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3), counter-clockwise
    edge_vertices: np.ndarray     # (ne, 2)
    edge_owner: np.ndarray        # (ne,)
    edge_neighbor: np.ndarray     # (ne,), BOUNDARY on the boundary
    edge_owner_local: np.ndarray  # (ne,) local edge index in the owner
    edge_neighbor_local: np.ndarray
    edge_normal: np.ndarray       # (ne, 2)
    edge_length: np.ndarray       # (ne,)
    element_edges: np.ndarray     # (nt, 3) global edge of local edge i (opposite vertex i)
    diameters: np.ndarray         # (nt,)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_neighbor != BOUNDARY)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_neighbor == BOUNDARY)

    @property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def edge_midpoints(self) -> np.ndarray:
        return self.vertices[self.edge_vertices].mean(axis=1)

    def dump(self, path) -> None:
        """Write ``v x y`` and ``t i j k`` lines (0-based)."""
        with open(path, "w") as fh:
            for x, y in self.vertices:
                fh.write(f"v {x:.17g} {y:.17g}\n")
            for i, j, k in self.triangles:
                fh.write(f"t {i} {j} {k}\n")


def build_mesh(vertices, triangles) -> Mesh:
    """Derive edge connectivity, normals and diameters from a triangle list."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    nt = len(triangles)

    # local edge i joins vertices i+1 and i+2
    loc = np.array([[1, 2], [2, 0], [0, 1]])
    pairs = triangles[:, loc]                       # (nt, 3, 2)
    key = np.sort(pairs, axis=2).reshape(-1, 2)
    uniq, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    ne = len(uniq)

    counts = np.bincount(inverse, minlength=ne)
    if counts.max() > 2:
        raise ValueError("non-manifold triangulation: an edge is shared by more than two triangles")

    flat = np.arange(3 * nt)
    owner_slot = first                              # lowest triangle index wins
    other = np.full(ne, -1)
    mask = flat != owner_slot[inverse]
    other[inverse[mask]] = flat[mask]

    owner = owner_slot // 3
    owner_local = owner_slot % 3
    neighbor = np.where(other >= 0, other // 3, BOUNDARY)
    neighbor_local = np.where(other >= 0, other % 3, -1)

    # directed edge of the owner in counter-clockwise order; outward normal is its right-hand side
    directed = pairs.reshape(-1, 2)[owner_slot]
    d = vertices[directed[:, 1]] - vertices[directed[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]

    element_edges = inverse.reshape(nt, 3)
    p = vertices[triangles]
    sides = np.stack([p[:, 1] - p[:, 2], p[:, 2] - p[:, 0], p[:, 0] - p[:, 1]], axis=1)
    diameters = np.linalg.norm(sides, axis=2).max(axis=1)

    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edge_vertices=uniq,
        edge_owner=owner,
        edge_neighbor=neighbor,
        edge_owner_local=owner_local,
        edge_neighbor_local=neighbor_local,
        edge_normal=normal,
        edge_length=length,
        element_edges=element_edges,
        diameters=diameters,
    )


def build_uniform_mesh(n: int) -> Mesh:
    """Split an ``n x n`` grid of the unit square along the bottom-left/top-right diagonals."""
    if int(n) != n or n < 1:
        raise ValueError(f"invalid mesh resolution n={n!r}; need an integer n >= 1")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(s, s, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    a = (j * (n + 1) + i).ravel()
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return build_mesh(vertices, triangles)


def velocity_at(beta, points: np.ndarray) -> np.ndarray:
    """Evaluate a constant or callable velocity at ``points`` of shape (..., 2)."""
    if callable(beta):
        out = np.asarray(beta(points[..., 0], points[..., 1]), dtype=float)
        # callables return a (2, ...) stack
        return np.moveaxis(out, 0, -1) * np.ones(points.shape)
    return np.broadcast_to(np.asarray(beta, dtype=float), points.shape)


@dataclass(frozen=True)
class EdgeClassification:
    """Inflow/outflow labels with respect to a velocity field.

    ``element_inflow[K, i]`` is True when local edge ``i`` of ``K`` lies in the
    inflow part of the element boundary.  ``boundary_inflow`` is only
    meaningful on boundary edges (False elsewhere).
    """

    owner_flux: np.ndarray        # beta . n_K at edge midpoints, owner orientation
    boundary_inflow: np.ndarray   # (ne,) bool
    element_inflow: np.ndarray    # (nt, 3) bool

    @property
    def owner_inflow(self) -> np.ndarray:
        return self.owner_flux < 0.0

    @property
    def neighbor_inflow(self) -> np.ndarray:
        return -self.owner_flux < 0.0


def classify_edges(mesh: Mesh, beta) -> EdgeClassification:
    """Label edges by the sign of ``beta . n`` at their midpoints (zero counts as outflow)."""
    flux = np.einsum("ij,ij->i", velocity_at(beta, mesh.edge_midpoints), mesh.edge_normal)
    owner_in = flux < 0.0
    neighbor_in = -flux < 0.0

    is_boundary = mesh.edge_neighbor == BOUNDARY
    element_inflow = np.zeros((mesh.n_triangles, 3), dtype=bool)
    element_inflow[mesh.edge_owner, mesh.edge_owner_local] = owner_in
    interior = ~is_boundary
    element_inflow[mesh.edge_neighbor[interior], mesh.edge_neighbor_local[interior]] = neighbor_in[interior]
    return EdgeClassification(
        owner_flux=flux,
        boundary_inflow=owner_in & is_boundary,
        element_inflow=element_inflow,
    )
