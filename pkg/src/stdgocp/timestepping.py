"""Forward state and backward adjoint sweeps.

Schemes
-------
``ThetaScheme``
    theta-method; the adjoint is either the theta discretization of the
    continuous adjoint equation (``"OD"``) or the adjoint of the discrete
    state equation with rectangle/trapezoid cost quadrature (``"DO"``).
``DGScheme``
    dG(0)/dG(1) in time.  With ``rhs="nodal"`` data and controls live at the
    time nodes and enter through the averaged right-hand sides of the
    classical block formulation.  With ``rhs="galerkin"`` controls are
    piecewise polynomials in time (two traces per interval), data is
    integrated with a 3-point Gauss rule, and the backward adjoint sweep is
    exactly the discrete adjoint of the forward sweep.

Controls are arrays: ``(N+1, ndof)`` nodal values, or ``(N, 2, ndof)``
interval traces ``(t_{m-1}^+, t_m^-)`` for Galerkin schemes.  Data arrays
(``F`` for the source, ``YD`` for the desired state) hold load vectors at
``scheme.data_times``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .assembly import SipgOperators
from .linalg import BlockSystem2x2, factorize, factorize_block

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)
GAUSS_TIMES = 0.5 * (_GAUSS_X + 1.0)
GAUSS_WEIGHTS = 0.5 * _GAUSS_W
# exact time mass of two linear traces on [0, 1]
TRACE_MASS = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0 or int(self.N) != self.N or self.N < 1:
            raise ValueError(f"invalid time grid T={self.T}, N={self.N}")

    @property
    def k(self) -> float:
        return self.T / self.N

    @property
    def t(self) -> np.ndarray:
        return self.k * np.arange(self.N + 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.N + 1, self.k)
        w[[0, -1]] *= 0.5
        return w


@dataclass(frozen=True)
class Trajectory:
    """Nodal values ``nodes[m] ~ v(t_m)``; dG trajectories also keep the two
    interval traces ``pairs[m-1] = (v(t_{m-1}^+), v(t_m^-))``."""

    grid: TimeGrid
    nodes: np.ndarray
    pairs: np.ndarray | None = None
    scheme: str = ""

    @property
    def ndof(self) -> int:
        return self.nodes.shape[1]

    def at(self, m: int) -> np.ndarray:
        return self.nodes[m]

    def export_csv(self, path, every: int = 1) -> None:
        """Rows ``m,t,dof,value``; only every ``every``-th node is written."""
        t = self.grid.t
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "t", "dof", "value"])
            for m in range(0, self.grid.N + 1, every):
                for i, v in enumerate(self.nodes[m]):
                    w.writerow([m, repr(float(t[m])), i, repr(float(v))])


def _apply(A, v: np.ndarray) -> np.ndarray:
    """``A`` applied along the last axis of a stack of vectors."""
    return (A @ v.reshape(-1, v.shape[-1]).T).T.reshape(v.shape)


def _check_finite(v: np.ndarray, what: str, m: int) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise SweepError(f"non-finite {what} at time step {m}")
    return v


class TimeScheme:
    """Common interface; subclasses own their factorizations."""

    name = ""
    galerkin = False

    def __init__(self, ops: SipgOperators, grid: TimeGrid):
        self.ops = ops
        self.grid = grid
        self.M = ops.M

    @property
    def data_times(self) -> np.ndarray:
        return self.grid.t

    def control_shape(self, ndof: int) -> tuple:
        return (self.grid.N + 1, ndof)

    def control_trajectory(self, u: np.ndarray) -> Trajectory:
        return Trajectory(self.grid, u, None, self.name)

    def control_adjoint(self, p: Trajectory) -> np.ndarray:
        """Adjoint values paired with the control in the optimality condition."""
        return p.nodes

    def control_weights(self) -> np.ndarray:
        return self.grid.trapezoid_weights()

    def pairing(self, g: np.ndarray, v: np.ndarray) -> float:
        """Discrete ``int_0^T (g, v) dt`` on the control representation."""
        return float(np.einsum("m,mi,mi->", self.control_weights(), g, _apply(self.M, v)))

    def control_cost(self, u: np.ndarray) -> float:
        return 0.5 * self.pairing(u, u)

    def state_cost(self, y: Trajectory, yd: np.ndarray) -> float:
        raise NotImplementedError

    def state(self, u, F, y0) -> Trajectory:
        raise NotImplementedError

    def adjoint(self, y: Trajectory, YD) -> Trajectory:
        raise NotImplementedError

    def _mass_norm2(self, e: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...i->...", e, _apply(self.M, e))


class ThetaScheme(TimeScheme):
    def __init__(self, ops, grid, theta: float, variant: str = "OD", endpoint_weights: bool = True):
        super().__init__(ops, grid)
        if not 0.0 <= theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {theta}")
        if variant not in ("OD", "DO"):
            raise ValueError(f"unknown adjoint variant {variant!r}")
        self.theta = theta
        self.variant = variant
        self.endpoint_weights = endpoint_weights
        self.name = f"theta({theta:g})-{variant}"
        k, M = grid.k, ops.M
        self._lhs = factorize(M + k * theta * ops.A_s)
        self._rhs = M - k * (1 - theta) * ops.A_s
        A = ops.A_a if variant == "OD" else ops.A_s.T.tocsr()
        self._lhs_adj = factorize(M + k * theta * A)
        self._rhs_adj = M - k * (1 - theta) * A
        if variant == "DO":
            self._mass = factorize(M)

    def state(self, u, F, y0) -> Trajectory:
        th, k, M, N = self.theta, self.grid.k, self.M, self.grid.N
        y = np.empty((N + 1, len(y0)))
        y[0] = y0
        for m in range(N):
            b = (self._rhs @ y[m] + k * ((1 - th) * F[m] + th * F[m + 1])
                 + k * (M @ ((1 - th) * u[m] + th * u[m + 1])))
            y[m + 1] = _check_finite(self._lhs.solve(b), "state", m + 1)
        return Trajectory(self.grid, y, None, self.name)

    def adjoint(self, y: Trajectory, YD) -> Trajectory:
        th, k, N = self.theta, self.grid.k, self.grid.N
        e = (self.M @ y.nodes.T).T - YD
        p = np.zeros_like(y.nodes)
        if self.variant == "OD":
            for m in range(N - 1, -1, -1):
                b = self._rhs_adj @ p[m + 1] - k * (th * e[m] + (1 - th) * e[m + 1])
                p[m] = _check_finite(self._lhs_adj.solve(b), "adjoint", m)
        else:
            p[N] = self._lhs_adj.solve(np.zeros(y.ndof))
            for m in range(N - 1, 0, -1):
                b = self._rhs_adj @ p[m + 1] - k * e[m]
                p[m] = _check_finite(self._lhs_adj.solve(b), "adjoint", m)
            p[0] = self._mass.solve(self._rhs_adj @ p[1] - k * e[0])
        return Trajectory(self.grid, p, None, self.name)

    def control_adjoint(self, p: Trajectory) -> np.ndarray:
        if self.variant == "OD":
            return p.nodes
        th, P = self.theta, p.nodes
        out = th * P + (1 - th) * np.roll(P, -1, axis=0)
        end = 2.0 if self.endpoint_weights else 1.0
        out[0] = end * (1 - th) * P[1]
        out[-1] = end * th * P[-1]
        return out

    def state_cost(self, y: Trajectory, yd: np.ndarray) -> float:
        e2 = self._mass_norm2(y.nodes - yd)
        if self.variant == "DO":
            return 0.5 * self.grid.k * float(e2[:-1].sum())
        return 0.5 * float(self.grid.trapezoid_weights() @ e2)


class DGScheme(TimeScheme):
    def __init__(self, ops, grid, q: int, rhs: str = "nodal"):
        super().__init__(ops, grid)
        if q not in (0, 1):
            raise ValueError(f"only dG(0) and dG(1) are available, got q={q}")
        if rhs not in ("nodal", "galerkin"):
            raise ValueError(f"unknown right-hand side treatment {rhs!r}")
        self.q = q
        self.galerkin = rhs == "galerkin"
        self.name = f"dg{q}" + ("-galerkin" if self.galerkin else "")
        k, M = grid.k, ops.M
        if q == 0:
            self._lhs = factorize(M + k * ops.A_s)
            self._lhs_adj = factorize(M + k * ops.A_a)
        else:
            self._lhs = factorize_block(self.block_system(ops.A_s))
            self._lhs_adj = factorize_block(self.block_system(ops.A_a))

    def block_system(self, A) -> BlockSystem2x2:
        k, M = self.grid.k, self.M
        return BlockSystem2x2(M + k * A, M + 0.5 * k * A, 0.5 * k * A, 0.5 * M + (k / 3) * A)

    @property
    def data_times(self) -> np.ndarray:
        if not self.galerkin:
            return self.grid.t
        return self.grid.t[:-1, None] + self.grid.k * GAUSS_TIMES[None, :]

    # -- controls -----------------------------------------------------------

    def control_shape(self, ndof):
        return (self.grid.N, 2, ndof) if self.galerkin else (self.grid.N + 1, ndof)

    def control_trajectory(self, u):
        if not self.galerkin:
            return Trajectory(self.grid, u, None, self.name)
        nodes = np.concatenate([u[:1, 0], u[:, 1]])
        return Trajectory(self.grid, nodes, u, self.name)

    def control_adjoint(self, p):
        return p.pairs if self.galerkin else p.nodes

    def pairing(self, g, v):
        if not self.galerkin:
            return super().pairing(g, v)
        Mv = _apply(self.M, v)
        return float(self.grid.k * np.einsum("rs,mri,msi->", TRACE_MASS, g, Mv))

    # -- cost ---------------------------------------------------------------

    def state_cost(self, y: Trajectory, yd: np.ndarray) -> float:
        k = self.grid.k
        if self.galerkin:
            # yd: projections at the Gauss times, (N, G, ndof)
            yq = (y.pairs[:, None, 0] * (1 - GAUSS_TIMES[None, :, None])
                  + y.pairs[:, None, 1] * GAUSS_TIMES[None, :, None])
            return 0.5 * k * float(np.einsum("g,mg->", GAUSS_WEIGHTS, self._mass_norm2(yq - yd)))
        if self.q == 0:
            return 0.5 * k * float(self._mass_norm2(y.nodes[1:] - yd[1:]).sum())
        eL = y.pairs[:, 0] - yd[:-1]
        eR = y.pairs[:, 1] - yd[1:]
        s = self._mass_norm2(eL) + np.einsum("mi,mi->m", eL, _apply(self.M, eR)) + self._mass_norm2(eR)
        return 0.5 * k * float(s.sum()) / 3.0

    # -- sweeps -------------------------------------------------------------

    def state(self, u, F, y0) -> Trajectory:
        N, k, M = self.grid.N, self.grid.k, self.M
        nodes = np.empty((N + 1, len(y0)))
        nodes[0] = y0
        pairs = np.empty((N, 2, len(y0)))
        for m in range(1, N + 1):
            r0, r1 = self._state_rhs(m, u, F)
            r0 = r0 + M @ nodes[m - 1]
            if self.q == 0:
                Y = self._lhs.solve(r0)
                left, right = Y, Y
            else:
                Y0, Y1 = self._lhs.solve_blocks(r0, r1)
                left, right = Y0, Y0 + Y1
            nodes[m] = _check_finite(right, "state", m)
            pairs[m - 1] = left, right
        return Trajectory(self.grid, nodes, pairs, self.name)

    def _state_rhs(self, m, u, F):
        """Source and control contributions of interval ``m`` (without the jump term)."""
        k, M = self.grid.k, self.M
        if not self.galerkin:
            r0 = 0.5 * k * (F[m] + F[m - 1]) + 0.5 * k * (M @ (u[m] + u[m - 1]))
            r1 = 0.5 * k * (F[m] + M @ u[m]) if self.q == 1 else None
            return r0, r1
        uL, uR = u[m - 1]
        Fm = F[m - 1]
        r0 = k * (GAUSS_WEIGHTS @ Fm) + 0.5 * k * (M @ (uL + uR))
        if self.q == 0:
            return r0, None
        r1 = k * ((GAUSS_WEIGHTS * GAUSS_TIMES) @ Fm) + k * (M @ (uL / 6 + uR / 3))
        return r0, r1

    def adjoint(self, y: Trajectory, YD) -> Trajectory:
        N, k, M = self.grid.N, self.grid.k, self.M
        ndof = y.ndof
        nodes = np.zeros((N + 1, ndof))
        pairs = np.empty((N, 2, ndof))
        for m in range(N, 0, -1):
            r0, r1 = self._adjoint_rhs(m, y, YD)
            r0 = r0 + M @ nodes[m]
            if self.q == 0:
                P = self._lhs_adj.solve(r0)
                left, right = P, P
            else:
                P0, P1 = self._lhs_adj.solve_blocks(r0, r1)
                left, right = P0 + P1, P0
            nodes[m - 1] = _check_finite(left, "adjoint", m - 1)
            pairs[m - 1] = left, right
        return Trajectory(self.grid, nodes, pairs, self.name)

    def _adjoint_rhs(self, m, y, YD):
        k, M = self.grid.k, self.M
        if not self.galerkin:
            yn = y.nodes
            r0 = -0.5 * k * (M @ (yn[m] + yn[m - 1])) + 0.5 * k * (YD[m] + YD[m - 1])
            r1 = -0.5 * k * (M @ yn[m - 1] - YD[m - 1]) if self.q == 1 else None
            return r0, r1
        yL, yR = y.pairs[m - 1]
        D = YD[m - 1]
        r0 = -0.5 * k * (M @ (yL + yR)) + k * (GAUSS_WEIGHTS @ D)
        if self.q == 0:
            return r0, None
        # reversed-time basis: sigma = 1 - tau
        r1 = -k * (M @ (yL / 3 + yR / 6)) + k * ((GAUSS_WEIGHTS * (1 - GAUSS_TIMES)) @ D)
        return r0, r1


def make_scheme(ops: SipgOperators, grid: TimeGrid, name: str, **options) -> TimeScheme:
    """Scheme from its table name: ``be``, ``cn-od``, ``cn-do``, ``dg0``, ``dg1``.

    dG schemes default to ``rhs="galerkin"``, whose adjoint is the exact
    discrete adjoint; pass ``rhs="nodal"`` for the averaged nodal variant.
    """
    rhs = options.pop("rhs", "galerkin")
    if name == "be":
        return ThetaScheme(ops, grid, 1.0, "OD", **options)
    if name in ("cn-od", "cn-do"):
        return ThetaScheme(ops, grid, 0.5, name[3:].upper(), **options)
    if name in ("dg0", "dg1"):
        return DGScheme(ops, grid, int(name[2]), rhs=rhs)
    raise ValueError(f"unknown scheme {name!r}")


# Functional entry points -------------------------------------------------

def theta_state_sweep(ops, grid, theta, u, F, y0) -> Trajectory:
    return ThetaScheme(ops, grid, theta).state(u, F, y0)


def theta_adjoint_sweep_OD(ops, grid, theta, y, YD) -> Trajectory:
    return ThetaScheme(ops, grid, theta, "OD").adjoint(y, YD)


def theta_adjoint_sweep_DO(ops, grid, theta, y, YD) -> Trajectory:
    return ThetaScheme(ops, grid, theta, "DO").adjoint(y, YD)


def dg0_state_sweep(ops, grid, u, F, y0) -> Trajectory:
    return DGScheme(ops, grid, 0).state(u, F, y0)


def dg0_adjoint_sweep(ops, grid, y, YD) -> Trajectory:
    return DGScheme(ops, grid, 0).adjoint(y, YD)


def dg1_state_sweep(ops, grid, u, F, y0) -> Trajectory:
    return DGScheme(ops, grid, 1).state(u, F, y0)


def dg1_adjoint_sweep(ops, grid, y, YD) -> Trajectory:
    return DGScheme(ops, grid, 1).adjoint(y, YD)
