"""Manufactured solutions of the optimality system.

Given closed forms of the state ``y`` and adjoint ``p``, the control is
``u = clamp(p / alpha, u_a, u_b)`` and the data follow from the strong
optimality system::

    f   = y_t - eps Lap(y) + beta . grad(y) + r y - u
    y_d = y - p_t - eps Lap(p) - beta . grad(p) + r p
    y_0 = y(., 0)

Derivatives are taken symbolically with sympy and compiled with
``lambdify``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sy

from .assembly import SipgParams
from .optimizer import OcpProblem

X1, X2, T = sy.symbols("x1 x2 t", real=True)

# Characteristic variable choices for the second example.
TX_DEFINITIONS = {
    "(x1+x2)/2": lambda: (X1 + X2) / 2,
    "(x1+x2-1)/2": lambda: (X1 + X2 - 1) / 2,
    "(x1+x2)/2-1/4": lambda: (X1 + X2) / 2 - sy.Rational(1, 4),
    "x1+x2-t": lambda: X1 + X2 - T,
    "x1+x2": lambda: X1 + X2,
    "x1-t/2": lambda: X1 - T / 2,
    "zero": lambda: sy.Integer(0),
}
DEFAULT_TX = "(x1+x2)/2-1/4"


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    eps: float
    beta: tuple[float, float]
    r: float
    alpha: float
    bounds: tuple[float, float]
    T: float
    y_expr: sy.Expr
    p_expr: sy.Expr
    f_expr: sy.Expr = field(init=False, repr=False)
    yd_expr: sy.Expr = field(init=False, repr=False)

    def __post_init__(self):
        y, p = self.y_expr, self.p_expr
        b1, b2 = (sy.nsimplify(b) for b in self.beta)
        eps, r = sy.Float(self.eps, 30), sy.nsimplify(self.r)

        def lap(g):
            return sy.diff(g, X1, 2) + sy.diff(g, X2, 2)

        def conv(g):
            return b1 * sy.diff(g, X1) + b2 * sy.diff(g, X2)

        f_smooth = sy.diff(y, T) - eps * lap(y) + conv(y) + r * y
        yd = y - sy.diff(p, T) - eps * lap(p) - conv(p) + r * p
        object.__setattr__(self, "f_expr", f_smooth)
        object.__setattr__(self, "yd_expr", yd)
        for name, expr in (("_y", y), ("_p", p), ("_f_smooth", f_smooth), ("_yd", yd)):
            object.__setattr__(self, name, sy.lambdify((X1, X2, T), expr, "numpy"))

    # callables of (x1, x2, t), broadcasting over arrays

    def y(self, x1, x2, t):
        return self._y(x1, x2, t) + np.zeros(np.broadcast(x1, x2).shape)

    def p(self, x1, x2, t):
        return self._p(x1, x2, t) + np.zeros(np.broadcast(x1, x2).shape)

    def u(self, x1, x2, t):
        return np.clip(self.p(x1, x2, t) / self.alpha, *self.bounds)

    def f(self, x1, x2, t):
        return self._f_smooth(x1, x2, t) - self.u(x1, x2, t) + np.zeros(np.broadcast(x1, x2).shape)

    def yd(self, x1, x2, t):
        return self._yd(x1, x2, t) + np.zeros(np.broadcast(x1, x2).shape)

    def y0(self, x1, x2):
        return self.y(x1, x2, 0.0)

    def params(self, sigma: float = 6.0) -> SipgParams:
        return SipgParams(self.eps, self.beta, self.r, sigma)

    def problem(self, sigma: float = 6.0, alpha: float | None = None) -> OcpProblem:
        if alpha is not None and alpha != self.alpha:
            # the data are tied to alpha through u = clamp(p / alpha)
            return _replace_alpha(self, alpha).problem(sigma)
        return OcpProblem(self.params(sigma), self.alpha, self.bounds, self.f, self.yd, self.y0, self.T)


def _replace_alpha(case: ManufacturedCase, alpha: float) -> ManufacturedCase:
    return ManufacturedCase(case.name, case.eps, case.beta, case.r, alpha, case.bounds, case.T,
                            case.y_expr, case.p_expr)


def make_example1(alpha: float = 1.0) -> ManufacturedCase:
    """Smooth solution transported by ``beta = (1, 0)`` with ``u >= 0``."""
    s = sy.sin(2 * sy.pi * X1) * sy.sin(2 * sy.pi * X2)
    y = sy.exp(-T) * s
    p = sy.exp(-T) * (1 - T) * s
    return ManufacturedCase("example1", 1e-5, (1.0, 0.0), 1.0, alpha, (0.0, np.inf), 1.0, y, p)


def make_example2(tx_definition: str = DEFAULT_TX, alpha: float = 1.0, eps: float = 1e-5) -> ManufacturedCase:
    """Steep exponential layer along ``t_x``; ``0 <= u <= 0.5``."""
    if tx_definition not in TX_DEFINITIONS:
        raise ValueError(f"unknown t_x definition {tx_definition!r}; choose from {sorted(TX_DEFINITIONS)}")
    tx = TX_DEFINITIONS[tx_definition]()
    e = sy.Float(eps, 30)
    se = sy.sqrt(e)
    s = sy.sin(2 * sy.pi * X1) * sy.sin(2 * sy.pi * X2)
    layer = sy.exp((-1 + sy.cos(tx)) / se)
    p = sy.sin(sy.pi * T) * s * layer
    y = (p * (sy.sin(tx) / (2 * se) + 8 * e * sy.pi**2 + se / 2 * sy.cos(tx) - sy.sin(tx) ** 2 / 2)
         - sy.pi * sy.cos(sy.pi * T) * s * layer)
    return ManufacturedCase("example2", eps, (0.5, 0.5), 1.0, alpha, (0.0, 0.5), 1.0, y, p)
