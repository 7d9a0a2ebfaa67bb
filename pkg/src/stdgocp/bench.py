"""Manufactured-solution convergence studies.

A study runs PDAS on a sequence of levels with ``h = k`` (``n = N = 1/k``
on the unit square), measures

* ``e_y``, ``e_p``: max over time nodes of the spatial L2 error,
* ``e_u``: trapezoid-in-time L2(L2) error,

and writes ``table.csv``, ``table.md``, one PDAS log per level and
optional field snapshots.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .manufactured import DEFAULT_TX, ManufacturedCase, make_example1, make_example2
from .optimizer import DiscreteOcp, OcpSolution

log = logging.getLogger(__name__)

SCHEMES = ("be", "cn-od", "cn-do", "dg0", "dg1")
DEFAULT_LEVELS = (5, 10, 20, 40)

__all__ = [
    "ManufacturedCase", "make_example1", "make_example2", "compute_errors", "convergence_rate",
    "LevelResult", "ConvergenceTable", "StudyConfig", "make_case", "run_level", "run_study",
]


def compute_errors(space, grid, numeric: OcpSolution, exact: ManufacturedCase) -> tuple[float, float, float]:
    for traj in (numeric.y, numeric.p, numeric.u):
        if traj.grid != grid or traj.ndof != space.ndof:
            raise ValueError("solution does not live on the given space/time grid")
    t = grid.t
    ey = max(space.l2_error(numeric.y.nodes[m], exact.y, t[m]) for m in range(grid.N + 1))
    ep = max(space.l2_error(numeric.p.nodes[m], exact.p, t[m]) for m in range(grid.N + 1))
    eu2 = np.array([space.l2_error(numeric.u.nodes[m], exact.u, t[m]) ** 2 for m in range(grid.N + 1)])
    return float(ey), float(ep), float(np.sqrt(grid.trapezoid_weights() @ eu2))


def convergence_rate(e_coarse: float, e_fine: float, step_ratio: float = 2.0) -> float:
    """``log(e_coarse / e_fine) / log(step_ratio)``."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError(f"errors must be positive, got {e_coarse}, {e_fine}")
    if not step_ratio > 1:
        raise ValueError(f"step ratio must exceed 1, got {step_ratio}")
    return math.log(e_coarse / e_fine) / math.log(step_ratio)


@dataclass
class LevelResult:
    n: int
    errors: tuple[float, float, float] | None = None
    iterations: int = 0
    kkt_residual: float = float("nan")
    seconds: float = 0.0
    failure: str | None = None

    @property
    def k(self) -> float:
        return 1.0 / self.n

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass
class ConvergenceTable:
    levels: list[LevelResult] = field(default_factory=list)
    title: str = ""

    def rates(self, i: int) -> tuple[float, float, float] | None:
        """Rates between level ``i - 1`` and level ``i`` (None if unavailable)."""
        if i == 0:
            return None
        a, b = self.levels[i - 1], self.levels[i]
        if not (a.ok and b.ok):
            return None
        return tuple(convergence_rate(ea, eb, a.k / b.k) for ea, eb in zip(a.errors, b.errors))

    @property
    def failed(self) -> list[LevelResult]:
        return [lv for lv in self.levels if not lv.ok]

    def rows(self):
        for i, lv in enumerate(self.levels):
            yield lv, lv.errors or (None,) * 3, self.rates(i) or (None,) * 3

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "e_y", "rate_y", "e_p", "rate_p", "e_u", "rate_u"])
            for lv, e, r in self.rows():
                cells = [repr(lv.k)]
                for ei, ri in zip(e, r):
                    cells += ["" if ei is None else repr(ei), "" if ri is None else f"{ri:.4f}"]
                w.writerow(cells)

    def to_markdown(self) -> str:
        head = "| k | state | rate | adjoint | rate | control | rate | PDAS its |"
        lines = [f"### {self.title}", ""] if self.title else []
        lines += [head, "|" + "---|" * 8]
        for lv, e, r in self.rows():
            if not lv.ok:
                lines.append(f"| 1/{lv.n} | failed: {lv.failure} | | | | | | |")
                continue
            cells = [f"1/{lv.n}"]
            for ei, ri in zip(e, r):
                cells += [f"{ei:.2e}", "" if ri is None else f"{ri:.2f}"]
            cells.append(str(lv.iterations))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


@dataclass
class StudyConfig:
    example: int = 1
    scheme: str = "dg0"
    levels: tuple[int, ...] = DEFAULT_LEVELS
    sigma: float = 6.0
    alpha: float | None = None
    tol: float = 1e-10
    max_iter: int = 50
    tx_def: str = DEFAULT_TX
    time_rhs: str = "galerkin"
    endpoint_weights: bool = True
    snapshots: tuple[float, ...] = ()
    out: str | Path | None = None

    def __post_init__(self):
        if self.example not in (1, 2):
            raise ValueError(f"example must be 1 or 2, got {self.example}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.levels or any(int(n) != n or n < 1 for n in self.levels):
            raise ValueError(f"levels must be positive integers, got {self.levels}")

    def scheme_options(self) -> dict:
        if self.scheme.startswith("dg"):
            return {"rhs": self.time_rhs}
        if self.scheme == "cn-do":
            return {"endpoint_weights": self.endpoint_weights}
        return {}


def make_case(config: StudyConfig) -> ManufacturedCase:
    alpha = 1.0 if config.alpha is None else config.alpha
    if config.example == 1:
        return make_example1(alpha)
    return make_example2(config.tx_def, alpha)


def run_level(case: ManufacturedCase, config: StudyConfig, n: int):
    """Solve one level; returns ``(LevelResult, DiscreteOcp, OcpSolution)``."""
    t0 = time.perf_counter()
    dp = DiscreteOcp.on_unit_square(case.problem(config.sigma), n, n, config.scheme, **config.scheme_options())
    sol = dp.pdas(config.tol, config.max_iter)
    errors = compute_errors(dp.space, dp.grid, sol, case)
    res = LevelResult(n, errors, sol.iterations, sol.kkt_residual, time.perf_counter() - t0)
    return res, dp, sol


def _write_snapshots(out: Path, dp: DiscreteOcp, sol: OcpSolution, times) -> None:
    t = dp.grid.t
    for ts in times:
        m = int(np.argmin(np.abs(t - ts)))
        for name, traj in (("y", sol.y), ("p", sol.p), ("u", sol.u)):
            dp.space.export_field(out / f"{name}_t{ts:g}.csv", traj.nodes[m])


def run_study(config: StudyConfig) -> ConvergenceTable:
    """Run all levels; a failing level is recorded and the study goes on."""
    case = make_case(config)
    title = f"Example {config.example}, {config.scheme}"
    if config.example == 2:
        title += f", t_x = {config.tx_def}"
    table = ConvergenceTable(title=title)
    out = Path(config.out) if config.out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    last = None
    for n in config.levels:
        try:
            res, dp, sol = run_level(case, config, n)
        except Exception as exc:  # recorded, the remaining levels still run
            log.warning("level n=%d failed: %s", n, exc)
            table.levels.append(LevelResult(n, failure=f"{type(exc).__name__}: {exc}"))
            continue
        log.info("n=%d: e=(%.3e, %.3e, %.3e), %d PDAS iterations, %.1fs",
                 n, *res.errors, res.iterations, res.seconds)
        table.levels.append(res)
        if out is not None:
            sol.write_log(out / f"pdas_n{n}.csv")
        last = (dp, sol)
    if out is not None:
        table.to_csv(out / "table.csv")
        (out / "table.md").write_text(table.to_markdown())
        if last is not None and config.snapshots:
            _write_snapshots(out, *last, config.snapshots)
    return table
