"""Finite-difference model problems on the unit square with manufactured solutions.

Every problem is a second-order operator

    L phi = a phi_xx + b phi_yy + c phi_xy + alpha phi_x + beta phi_y = g

discretised with central differences on a uniform grid with ``2^J + 1``
points per axis.  The assembled system is ``A = -L_h`` (positive diagonal
for the elliptic problems) over the ``(2^J - 1)^2`` interior unknowns,
ordered row by row with x varying fastest; Dirichlet values taken from the
exact solution are folded into the right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .sparse import SparseMatrix

PI = np.pi


@dataclass(frozen=True)
class ProblemDef:
    """Coefficient functions of ``L`` plus source and exact solution.

    Coefficients left as ``None`` are identically zero.
    """

    name: str
    params: tuple
    a: Callable
    b: Callable
    g: Callable
    exact: Callable
    c: Optional[Callable] = None
    alpha: Optional[Callable] = None
    beta: Optional[Callable] = None


def _const(v):
    return lambda x, y: np.full(np.broadcast(x, y).shape, float(v))


# -- individual problems ------------------------------------------------------


def _sine(x, y):
    return np.sin(PI * x) * np.sin(PI * y)


def _poisson(p):
    g = lambda x, y: -2 * PI ** 2 * _sine(x, y)
    return dict(a=_const(1), b=_const(1), g=g, exact=_sine)


def _anisotropic(p):
    # weak coupling along x, so vertical grid lines decouple as eps -> 0
    eps = p["eps"]
    g = lambda x, y: -(1 + eps) * PI ** 2 * _sine(x, y)
    return dict(a=_const(eps), b=_const(1), g=g, exact=_sine)


def _general(p):
    a = lambda x, y: np.exp(-x * (y + 2)) + 10
    b = lambda x, y: np.exp(-2 * x + 2 * y) * np.cos(2 * PI * (2 * x + y / 2)) ** 2 + 3
    al = lambda x, y: np.cos(PI * (x + y / 2)) * np.cos(2 * PI * x) + 4
    be = lambda x, y: np.exp(2 * x - 2 * y)
    ex = lambda x, y: np.cos(PI * x) * np.cos(PI * y)

    def g(x, y):
        phi = ex(x, y)
        return (-(a(x, y) + b(x, y)) * PI ** 2 * phi
                - al(x, y) * PI * np.sin(PI * x) * np.cos(PI * y)
                - be(x, y) * PI * np.cos(PI * x) * np.sin(PI * y))
    return dict(a=a, b=b, alpha=al, beta=be, g=g, exact=ex)


def _mixed(p):
    eps = p["eps"]
    ex = lambda x, y: 2 * x ** 3 * y ** 4
    g = lambda x, y: 12 * x * y ** 4 + 24 * x ** 3 * y ** 2 + (2 - eps) * 24 * x ** 2 * y ** 3
    return dict(a=_const(1), b=_const(1), c=_const(2 - eps), g=g, exact=ex)


def _boundary_layer(p):
    eps = p["eps"]
    e1 = np.exp(-1 / eps)

    def ex(x, y):
        return (2 * e1 - np.exp((x - 1) / eps) - np.exp((y - 1) / eps)) / (e1 - 1)
    # written as eps*Lap - d/dx - d/dy so that A = -L_h is the advection-diffusion matrix
    return dict(a=_const(eps), b=_const(eps), alpha=_const(-1), beta=_const(-1),
                g=lambda x, y: np.zeros(np.broadcast(x, y).shape), exact=ex)


def _inner_layer(p):
    eps = p["eps"]
    ex = lambda x, y: np.exp(-(x + y - 1) ** 2 / eps)

    def g(x, y):
        s = x + y - 1
        return (8 * s ** 2 / eps - 4 - 2 * s * (x + y) / eps) * ex(x, y)
    return dict(a=_const(eps), b=_const(eps), alpha=lambda x, y: x + 0 * y,
                beta=lambda x, y: y + 0 * x, g=g, exact=ex)


def _stretched(p):
    pw, eta, eps = p["p"], p["eta"], p["eps"]
    u = lambda t: 1 + ((t - 0.5) ** 2 + eta) ** pw / eps
    ex = lambda x, y: np.cos(2 * PI * (x + y)) * np.sin(2 * PI * (x - y))

    def g(x, y):
        return -8 * PI ** 2 * u(x) * np.sin(4 * PI * x) + 8 * PI ** 2 * u(y) * np.sin(4 * PI * y)
    return dict(a=lambda x, y: u(x) + 0 * y, b=lambda x, y: u(y) + 0 * x, g=g, exact=ex)


_BUILDERS = {
    "poisson": (_poisson, ()),
    "anisotropic": (_anisotropic, ("eps",)),
    "general": (_general, ()),
    "mixed": (_mixed, ("eps",)),
    "boundary-layer": (_boundary_layer, ("eps",)),
    "inner-layer": (_inner_layer, ("eps",)),
    "stretched": (_stretched, ("p", "eta", "eps")),
}

#: Parameters of the first column of each benchmark table.
DEFAULT_PARAMS = {
    "poisson": {},
    "anisotropic": {"eps": 1e-3},
    "general": {},
    "mixed": {"eps": 0.01},
    "boundary-layer": {"eps": 0.01},
    "inner-layer": {"eps": 0.015},
    "stretched": {"p": 20, "eta": 0.5, "eps": 1e-6},
}

PROBLEM_NAMES = tuple(_BUILDERS)


def problem_def(name: str, params: Optional[dict] = None) -> ProblemDef:
    if name not in _BUILDERS:
        raise KeyError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}")
    builder, keys = _BUILDERS[name]
    params = dict(params or {})
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"problem {name!r} needs parameters {missing}")
    extra = [k for k in params if k not in keys]
    if extra:
        raise ValueError(f"problem {name!r} does not take parameters {extra}")
    return ProblemDef(name, tuple(sorted(params.items())), **builder(params))


def exact_solution(name: str, params: Optional[dict], x, y):
    return problem_def(name, params).exact(np.asarray(x, float), np.asarray(y, float))


# -- assembly -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StencilProblem:
    """Assembled interior system of one problem on one grid.

    Attributes
    ----------
    A : SparseMatrix
        ``-L_h`` over interior unknowns.
    b : ndarray
        ``-g`` plus folded boundary values.
    exact : ndarray
        Exact solution sampled at the interior points.
    """

    name: str
    J: int
    params: dict
    A: SparseMatrix
    b: np.ndarray
    exact: np.ndarray
    definition: ProblemDef = field(repr=False)

    @property
    def n_axis(self) -> int:
        return 2 ** self.J - 1

    @property
    def h(self) -> float:
        return 1.0 / 2 ** self.J

    @property
    def stencil(self) -> str:
        return "9pt" if self.definition.c is not None else "5pt"


_OFFSETS = [(-1, -1), (0, -1), (1, -1), (-1, 0), (0, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


def stencil_weights(d: ProblemDef, x, y, h: float) -> dict:
    """Coefficients of ``L_h`` at points ``(x, y)`` keyed by offset ``(di, dj)``."""
    a = d.a(x, y)
    b = d.b(x, y)
    w = {(0, 0): -2 * (a + b) / h ** 2,
         (1, 0): a / h ** 2, (-1, 0): a / h ** 2,
         (0, 1): b / h ** 2, (0, -1): b / h ** 2}
    if d.alpha is not None:
        al = d.alpha(x, y) / (2 * h)
        w[(1, 0)] = w[(1, 0)] + al
        w[(-1, 0)] = w[(-1, 0)] - al
    if d.beta is not None:
        be = d.beta(x, y) / (2 * h)
        w[(0, 1)] = w[(0, 1)] + be
        w[(0, -1)] = w[(0, -1)] - be
    if d.c is not None:
        c = d.c(x, y) / (4 * h ** 2)
        w[(1, 1)] = c
        w[(-1, -1)] = c
        w[(1, -1)] = -c
        w[(-1, 1)] = -c
    return w


def assemble_def(d: ProblemDef, J: int) -> StencilProblem:
    if J < 1:
        raise ValueError("J must be at least 1")
    m = 2 ** J - 1
    h = 1.0 / 2 ** J
    t = np.arange(1, m + 1) * h
    X = np.tile(t, m)
    Y = np.repeat(t, m)
    I = np.tile(np.arange(m), m)
    Jj = np.repeat(np.arange(m), m)
    w = stencil_weights(d, X, Y, h)
    rhs = -d.g(X, Y)
    rows, cols, vals = [], [], []
    for (di, dj), coef in w.items():
        coef = np.broadcast_to(-coef, X.shape)   # A = -L_h
        ii, jj = I + di, Jj + dj
        inside = (ii >= 0) & (ii < m) & (jj >= 0) & (jj < m)
        rows.append(np.nonzero(inside)[0])
        cols.append(jj[inside] * m + ii[inside])
        vals.append(coef[inside])
        out = ~inside
        if np.any(out):
            xb = (ii[out] + 1) * h
            yb = (jj[out] + 1) * h
            np.subtract.at(rhs, np.nonzero(out)[0], coef[out] * d.exact(xb, yb))
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(m * m, m * m))
    return StencilProblem(d.name, J, dict(d.params), SparseMatrix.from_scipy(M), rhs,
                          d.exact(X, Y), d)


def assemble(name: str, J: int, params: Optional[dict] = None) -> StencilProblem:
    """Assemble problem ``name`` on the grid with ``2^J + 1`` points per axis."""
    return assemble_def(problem_def(name, params), J)
