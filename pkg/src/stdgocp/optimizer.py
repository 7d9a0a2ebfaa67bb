"""Control-constrained optimal control: reduced gradient, discrete cost and
the primal-dual active set iteration over full state/adjoint sweeps."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import SipgParams, assemble_load, assemble_operators
from .dg_space import DgSpace
from .mesh import build_uniform_mesh
from .timestepping import TimeGrid, TimeScheme, Trajectory, make_scheme

log = logging.getLogger(__name__)

INACTIVE, LOWER, UPPER = 0, -1, 1


def _zero(x1, x2, t=0.0):
    return np.zeros(np.broadcast(x1, x2).shape)


@dataclass(frozen=True)
class OcpProblem:
    """Data of ``min 1/2 int ||y - y_d||^2 + alpha ||u||^2`` subject to the
    state equation and ``u_a <= u <= u_b``.

    ``f`` and ``yd`` are callables ``(x1, x2, t)``; ``y0`` takes ``(x1, x2)``.
    """

    params: SipgParams
    alpha: float
    bounds: tuple[float, float] = (-np.inf, np.inf)
    f: object = _zero
    yd: object = _zero
    y0: object = _zero
    T: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"regularization weight must be positive, got alpha={self.alpha}")
        if not self.bounds[0] < self.bounds[1]:
            raise ValueError(f"need u_a < u_b, got bounds {self.bounds}")


class OptimizationError(RuntimeError):
    pass


@dataclass
class PdasIteration:
    iteration: int
    active_lower: int
    active_upper: int
    update_norm: float


@dataclass(frozen=True)
class OcpSolution:
    y: Trajectory
    u: Trajectory
    p: Trajectory
    iterations: int
    kkt_residual: float
    history: list = field(default_factory=list)

    def write_log(self, path) -> None:
        write_pdas_log(path, self.history)


def write_pdas_log(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "active_lower", "active_upper", "update_norm"])
        for h in history:
            w.writerow([h.iteration, h.active_lower, h.active_upper, repr(h.update_norm)])


def project_control(p, alpha: float, bounds) -> np.ndarray:
    """Pointwise ``clamp(p / alpha, u_a, u_b)``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return np.clip(np.asarray(p, dtype=float) / alpha, bounds[0], bounds[1])


def _classify(w, ua, ub) -> np.ndarray:
    return np.where(w <= ua, LOWER, np.where(w >= ub, UPPER, INACTIVE)).astype(np.int8)


class DiscreteOcp:
    """An :class:`OcpProblem` on a mesh and time grid with a chosen scheme.

    Load vectors of ``f`` and ``y_d`` and the projected initial state are
    computed once; every state/adjoint solve reuses the scheme's
    factorizations.
    """

    def __init__(self, problem: OcpProblem, space: DgSpace, grid: TimeGrid, scheme: str | TimeScheme,
                 **scheme_options):
        if not problem.params.eps > 0:
            raise ValueError("solves require a positive diffusion coefficient")
        self.problem = problem
        self.space = space
        self.grid = grid
        self.ops = assemble_operators(space, problem.params)
        if isinstance(scheme, str):
            scheme = make_scheme(self.ops, grid, scheme, **scheme_options)
        self.scheme = scheme

        times = scheme.data_times
        flat = times.ravel()
        shape = times.shape + (space.ndof,)
        self.F = np.array([assemble_load(space, problem.f, t) for t in flat]).reshape(shape)
        self.YD = np.array([assemble_load(space, problem.yd, t) for t in flat]).reshape(shape)
        self.yd_proj = np.array([space.l2_project(problem.yd, t) for t in flat]).reshape(shape)
        y0 = problem.y0
        self.y0 = space.l2_project(lambda x1, x2, t: y0(x1, x2), 0.0)

    @classmethod
    def on_unit_square(cls, problem: OcpProblem, n: int, N: int, scheme, **options) -> DiscreteOcp:
        return cls(problem, DgSpace(build_uniform_mesh(n)), TimeGrid(problem.T, N), scheme, **options)

    @property
    def ndof(self) -> int:
        return self.space.ndof

    def zero_control(self) -> np.ndarray:
        return np.zeros(self.scheme.control_shape(self.ndof))

    def _check_control(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != self.scheme.control_shape(self.ndof):
            raise ValueError(f"control has shape {u.shape}, expected {self.scheme.control_shape(self.ndof)}")
        return u

    def solve_state(self, u) -> Trajectory:
        return self.scheme.state(self._check_control(u), self.F, self.y0)

    def solve_adjoint(self, y: Trajectory) -> Trajectory:
        return self.scheme.adjoint(y, self.YD)

    def cost(self, u, y: Trajectory | None = None) -> float:
        u = self._check_control(u)
        if y is None:
            y = self.solve_state(u)
        if y.grid != self.grid:
            raise ValueError("state trajectory lives on a different time grid")
        return self.scheme.state_cost(y, self.yd_proj) + self.problem.alpha * self.scheme.control_cost(u)

    def reduced_gradient(self, u) -> np.ndarray:
        """``alpha u - p(u)`` on the control representation (bounds ignored)."""
        u = self._check_control(u)
        p = self.solve_adjoint(self.solve_state(u))
        return self.problem.alpha * u - self.scheme.control_adjoint(p)

    def pdas(self, tol: float = 1e-10, max_iter: int = 50, u0=None) -> OcpSolution:
        """Primal-dual active set iteration with ``c = alpha``.

        Each pass solves state and adjoint for the current control, predicts
        ``w = p / alpha``, marks DOFs where ``w`` violates a bound as active,
        and sets the control to the bound there and to ``w`` elsewhere.  The
        loop ends once the active sets repeat and the control moved by at
        most ``tol`` in the max norm.
        """
        if not tol > 0 or max_iter < 1:
            raise ValueError(f"need tol > 0 and max_iter >= 1, got {tol}, {max_iter}")
        alpha = self.problem.alpha
        ua, ub = self.problem.bounds
        u = np.clip(self.zero_control() if u0 is None else self._check_control(u0), ua, ub)
        sets = _classify(u, ua, ub)
        history = []
        for it in range(1, max_iter + 1):
            y = self.solve_state(u)
            p = self.solve_adjoint(y)
            w = self.scheme.control_adjoint(p) / alpha
            if not np.all(np.isfinite(w)):
                raise OptimizationError(f"non-finite adjoint in PDAS iteration {it}")
            new_sets = _classify(w, ua, ub)
            u_new = np.where(new_sets == LOWER, ua, np.where(new_sets == UPPER, ub, w))
            update = float(np.max(np.abs(u_new - u)))
            history.append(PdasIteration(it, int(np.sum(new_sets == LOWER)), int(np.sum(new_sets == UPPER)), update))
            log.debug("pdas %d: lower=%d upper=%d update=%.3e",
                      it, history[-1].active_lower, history[-1].active_upper, update)
            stable = np.array_equal(new_sets, sets)
            sets = new_sets
            if stable and update <= tol:
                return OcpSolution(y, self.scheme.control_trajectory(u), p, it, update, history)
            u = u_new
        raise OptimizationError(
            f"PDAS did not converge in {max_iter} iterations; last update norm {history[-1].update_norm:.3e}")


def reduced_gradient(dp: DiscreteOcp, u) -> np.ndarray:
    return dp.reduced_gradient(u)


def discrete_cost(dp: DiscreteOcp, u, y: Trajectory | None = None) -> float:
    return dp.cost(u, y)


def pdas_solve(dp: DiscreteOcp, tol: float = 1e-10, max_iter: int = 50) -> OcpSolution:
    return dp.pdas(tol, max_iter)
