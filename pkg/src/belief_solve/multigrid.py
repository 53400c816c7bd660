"""Geometric multigrid V-cycles on the unit square with pluggable smoothers.

Coarse operators are rediscretised from the problem definition, the
coarsest level is solved with a dense LU factorisation, restriction is full
weighting and prolongation bilinear interpolation.  GaBP smoothers always
act on the error equation ``A e = r`` and add the result to the iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .analysis.flops import flop_table, gauss_seidel, stencil_class
from .classic import KINDS as CLASSIC_KINDS
from .classic import Relaxer, SmootherConfig
from .gabp import FrozenLambda, MessageState, PivotBreakdown, _graph, gabp_sweep, precompute_lambda
from .ordering import Schedule
from .problems import ProblemDef, StencilProblem, assemble_def, problem_def
from .region import GeneralizedEngine, build_two_layer_region_graph, line_regions
from .report import CONVERGED, DIVERGED, MAX_ITER, SolveReport
from .sparse import SparseMatrix, residual_inf_norm

GABP_SMOOTHERS = {
    "gabp": "sequential-lexicographic",
    "rb-gabp": "red-black",
    "4c-gabp": "four-color",
    "flood-gabp": "parallel-flood",
}
PERSIST_SCOPES = ("call", "cycle", "solve")
SMOOTHER_NAMES = tuple(GABP_SMOOTHERS) + ("line-gabp",) + CLASSIC_KINDS

#: Residual growth over the initial residual that marks a multigrid run as diverged.
MG_DIVERGENCE_FACTOR = 1e6


class SmootherBreakdown(ArithmeticError):
    """A smoother failed on a given level (0 is the finest)."""

    def __init__(self, level: int, cause: Exception):
        super().__init__(f"smoother broke down on level {level}: {cause}")
        self.level = level
        self.cause = cause


@dataclass(frozen=True)
class CycleSpec:
    """``V(J1, J2)`` with ``(pre, post)`` sweeps of ``smoother``.

    ``levels`` counts grids from the finest ``2^J1 + 1`` down to the
    coarsest ``2^(J1 - levels + 1) + 1``.  ``frozen`` precomputes GaBP
    precision messages per level.  ``persist`` sets how long GaBP messages
    live: ``"call"`` resets them for every smoothing call, ``"cycle"`` keeps
    them from pre- to post-smoothing, ``"solve"`` keeps them for the whole
    run.
    """

    J1: int
    levels: int
    pre: int = 1
    post: int = 1
    smoother: str = "gabp"
    frozen: bool = True
    persist: str = "call"

    def __post_init__(self):
        if self.smoother not in SMOOTHER_NAMES:
            raise ValueError(f"unknown smoother {self.smoother!r}; expected one of {SMOOTHER_NAMES}")
        if self.levels < 1 or self.J1 - self.levels + 1 < 1:
            raise ValueError(f"V({self.J1},{self.levels}) leaves no coarse grid")
        if self.pre < 0 or self.post < 0:
            raise ValueError("sweep counts must be nonnegative")
        if self.persist not in PERSIST_SCOPES:
            raise ValueError(f"persist must be one of {PERSIST_SCOPES}")

    @property
    def label(self) -> str:
        return f"V({self.J1},{self.levels}) {self.smoother} ({self.pre},{self.post})"


@dataclass(eq=False)
class GridLevel:
    """One grid of the hierarchy and its smoother state."""

    J: int
    problem: StencilProblem
    smoother: object = None
    frozen: Optional[FrozenLambda] = None

    @property
    def points_per_axis(self) -> int:
        return 2 ** self.J + 1

    @property
    def h(self) -> float:
        return 1.0 / 2 ** self.J

    @property
    def n_axis(self) -> int:
        return 2 ** self.J - 1

    @property
    def operator(self) -> SparseMatrix:
        return self.problem.A


def prolongation_1d(nc: int) -> sp.csr_matrix:
    """Linear interpolation from ``nc`` to ``2 nc + 1`` interior points."""
    nf = 2 * nc + 1
    rows, cols, vals = [], [], []
    for I in range(nc):
        f = 2 * I + 1
        rows += [f - 1, f, f + 1]
        cols += [I, I, I]
        vals += [0.5, 1.0, 0.5]
    return sp.csr_matrix((vals, (rows, cols)), shape=(nf, nc))


def prolongation_matrix(nc: int) -> sp.csr_matrix:
    """Bilinear interpolation on the square grid, x fastest."""
    P1 = prolongation_1d(nc)
    return sp.kron(P1, P1, format="csr")


def restriction_matrix(nc: int) -> sp.csr_matrix:
    """Full weighting, ``R = P^T / 4``."""
    return (prolongation_matrix(nc).T * 0.25).tocsr()


def _coarse_size(v: np.ndarray) -> int:
    nf = int(round(np.sqrt(v.size)))
    if nf * nf != v.size or nf % 2 == 0 or nf < 3:
        raise ValueError(f"vector of length {v.size} is not a fine grid with a coarse level")
    return (nf - 1) // 2


def restrict(fine) -> np.ndarray:
    """Full-weighting restriction of a fine interior vector."""
    v = np.asarray(fine, dtype=np.float64)
    nc = _coarse_size(v)
    nf = 2 * nc + 1
    F = v.reshape(nf, nf)
    W = (F[0:-2:2] + 2 * F[1:-1:2] + F[2::2]) / 4.0
    C = (W[:, 0:-2:2] + 2 * W[:, 1:-1:2] + W[:, 2::2]) / 4.0
    return C.ravel()


def prolong(coarse, nc: Optional[int] = None) -> np.ndarray:
    """Bilinear interpolation of a coarse interior vector (zero boundary)."""
    c = np.asarray(coarse, dtype=np.float64)
    nc = int(round(np.sqrt(c.size))) if nc is None else nc
    if nc * nc != c.size:
        raise ValueError("coarse vector is not square")
    nf = 2 * nc + 1
    C = np.zeros((nc + 2, nc + 2))
    C[1:-1, 1:-1] = c.reshape(nc, nc)
    F = np.zeros((nf + 2, nf + 2))
    F[::2, ::2] = C
    F[1::2, ::2] = 0.5 * (C[:-1] + C[1:])
    F[:, 1::2] = 0.5 * (F[:, :-1:2] + F[:, 2::2])
    return F[1:-1, 1:-1].ravel()


class _GabpSmoother:
    """Error-correction GaBP starting from zero messages on every call."""

    def __init__(self, A, schedule, frozen):
        self.A = A
        self.graph = _graph(A)
        self.schedule = schedule
        self.frozen = frozen

    def _sweeps(self, r, state, first, sweeps):
        e = np.zeros(self.graph.n)
        for s in range(first, first + sweeps):
            state, e = gabp_sweep(self.graph, r, state, self.schedule, frozen=self.frozen, sweep=s)
        return state, e

    def __call__(self, b, x, sweeps):
        r = b - self.A.matvec(x)
        _, e = self._sweeps(r, MessageState.zeros(self.graph), 1, sweeps)
        return x + e

    def reset(self):
        pass

    def start_cycle(self):
        pass


class _PersistentGabp(_GabpSmoother):
    """GaBP whose messages outlive a single smoothing call.

    Messages represent a partial solve of ``A e = r`` and the smoother
    returns ``x0 + e``.  When a call arrives with a new iterate ``x`` and
    right-hand side ``b`` (after a coarse correction, or in a later cycle)
    the pair is re-anchored so that ``x0 + e = x`` and ``r = b - A x0``;
    the messages then keep refining the same linear problem.  ``scope`` is
    ``"cycle"`` (reset at the start of every V-cycle) or ``"solve"``.
    """

    def __init__(self, A, schedule, frozen, scope):
        super().__init__(A, schedule, frozen)
        self.scope = scope
        self.reset()

    def reset(self):
        self._state = None
        self._e = None
        self._done = 0

    def start_cycle(self):
        if self.scope == "cycle":
            self.reset()

    def __call__(self, b, x, sweeps):
        if self._state is None:
            self._state = MessageState.zeros(self.graph)
            self._e = np.zeros_like(x)
        x0 = x - self._e
        r = b - self.A.matvec(x0)
        self._state, e = self._sweeps(r, self._state, self._done + 1, sweeps)
        if sweeps:
            self._e = e
        self._done += sweeps
        return x0 + self._e


class _Stateless:
    def reset(self):
        pass

    def start_cycle(self):
        pass


class _LineGabp(_Stateless):
    """Generalized GaBP with every grid line as a large region."""

    def __init__(self, A, n_axis):
        self.A = A
        self.rg = build_two_layer_region_graph(A, line_regions(n_axis))
        self.engine = GeneralizedEngine(A, self.rg)
        self.n_slots = len(self.engine.plan.edges)

    def __call__(self, b, x, sweeps):
        r = b - self.A.matvec(x)
        lam = np.zeros(self.n_slots)
        m = np.zeros(self.n_slots)
        e = np.zeros_like(x)
        for _ in range(sweeps):
            lam, m, e = self.engine.sweep_flat(r, lam, m)
        return x + e


class _Classic(_Stateless):
    def __init__(self, A, kind, n_axis):
        self.relax = Relaxer(A, SmootherConfig(kind, n_axis, n_axis))

    def __call__(self, b, x, sweeps):
        return self.relax(b, x, sweeps)


@dataclass(eq=False)
class Hierarchy:
    """Levels fine to coarse plus the factorised coarsest operator."""

    levels: list
    spec: CycleSpec
    definition: ProblemDef
    coarse_lu: tuple = field(repr=False, default=None)
    notes: dict = field(default_factory=dict)

    @property
    def fine(self) -> GridLevel:
        return self.levels[0]


def _make_smoother(level: GridLevel, spec: CycleSpec, notes: dict, idx: int):
    A = level.operator
    name = spec.smoother
    if name in GABP_SMOOTHERS:
        kind = GABP_SMOOTHERS[name]
        schedule = Schedule.flood() if kind == "parallel-flood" else Schedule.for_grid(kind, level.n_axis)
        frozen = None
        if spec.frozen:
            frozen = precompute_lambda(A, schedule, tol=1e-10, max_iter=500)
            if not frozen.converged or not np.all(np.isfinite(frozen.sigma)):
                notes.setdefault("cold_levels", []).append(idx)
                frozen = None
        level.frozen = frozen
        if spec.persist == "call":
            return _GabpSmoother(A, schedule, frozen)
        return _PersistentGabp(A, schedule, frozen, spec.persist)
    if name == "line-gabp":
        return _LineGabp(A, level.n_axis)
    return _Classic(A, name, level.n_axis)


def build_hierarchy(problem, spec: CycleSpec, params: Optional[dict] = None) -> Hierarchy:
    """Assemble every level of ``spec`` for a problem name or :class:`ProblemDef`."""
    d = problem if isinstance(problem, ProblemDef) else problem_def(problem, params)
    levels, notes = [], {}
    Js = list(range(spec.J1, spec.J1 - spec.levels, -1))
    for idx, J in enumerate(Js):
        lvl = GridLevel(J, assemble_def(d, J))
        if idx < len(Js) - 1:
            lvl.smoother = _make_smoother(lvl, spec, notes, idx)
        levels.append(lvl)
    coarse = levels[-1].operator.to_dense()
    return Hierarchy(levels, spec, d, sla.lu_factor(coarse), notes)


def _cycle(h: Hierarchy, k: int, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    spec = h.spec
    lvl = h.levels[k]
    if k == len(h.levels) - 1:
        return sla.lu_solve(h.coarse_lu, b)
    sm = lvl.smoother
    try:
        if spec.pre:
            x = sm(b, x, spec.pre)
        r = b - lvl.operator.matvec(x)
        ec = _cycle(h, k + 1, restrict(r), np.zeros(h.levels[k + 1].problem.b.size))
        x = x + prolong(ec, h.levels[k + 1].n_axis)
        if spec.post:
            x = sm(b, x, spec.post)
    except (PivotBreakdown, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        raise SmootherBreakdown(k, exc) from exc
    return x


def v_cycle(h: Hierarchy, b, x) -> np.ndarray:
    """One V-cycle on the fine level; returns the new iterate."""
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if b.shape != x.shape or b.size != h.fine.operator.n:
        raise ValueError("vector sizes do not match the fine level")
    for lvl in h.levels[:-1]:
        lvl.smoother.start_cycle()
    return _cycle(h, 0, b, x)


def cycle_flops(h: Hierarchy) -> dict:
    """Per-unknown smoother cost of one cycle on the fine level.

    ``analytic`` follows the stencil-class formulas (``None`` when no
    formula applies); ``measured`` counts two operations per stored matrix
    entry touched, which is exact for point relaxation.
    """
    spec = h.spec
    A = h.fine.operator
    st = stencil_class(A)
    calls = [s for s in (spec.pre, spec.post) if s > 0]
    name = spec.smoother
    analytic = 0.0
    try:
        for s in calls:
            if name in GABP_SMOOTHERS:
                analytic += flop_table(st, "gabp", s) if spec.frozen else np.nan
            elif name == "line-gabp":
                analytic += flop_table(st, "line-gabp", s)
            elif name in ("gs", "rb-gs", "4c-gs"):
                analytic += gauss_seidel(st, s)
            elif name in ("x-line", "y-line", "zebra", "zebra-y"):
                analytic += flop_table(st, "xy-gs", s)
            elif name == "alt-zebra":
                analytic += 2 * flop_table(st, "xy-gs", s)
            else:
                analytic += gauss_seidel(st, s)
    except ValueError:
        analytic = np.nan
    per_sweep = (2 * A.nnz + A.n) / A.n
    factor = 2 if name == "alt-zebra" else 1
    measured = per_sweep * factor * sum(calls)
    return {"analytic": None if np.isnan(analytic) else float(analytic), "measured": float(measured)}


def mg_solve(h: Hierarchy, b=None, tol: float = 2e-4, max_cycles: int = 500, x0=None) -> SolveReport:
    """Repeat V-cycles until ``||b - A x||_inf <= tol``.

    ``flop_estimate`` is per fine-level unknown (smoother only), analytic
    where available and measured otherwise; both are in ``info``.
    """
    A = h.fine.operator
    b = h.fine.problem.b if b is None else np.asarray(b, dtype=np.float64)
    x = np.zeros(A.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    for lvl in h.levels[:-1]:
        lvl.smoother.reset()
    r0 = residual_inf_norm(A, x, b)
    hist = [r0]
    status, it, info = MAX_ITER, 0, dict(h.notes)
    if r0 <= tol:
        status = CONVERGED
    else:
        for it in range(1, max_cycles + 1):
            try:
                x = v_cycle(h, b, x)
            except SmootherBreakdown as exc:
                status = DIVERGED
                info["level"] = exc.level
                hist.append(float("inf"))
                break
            res = residual_inf_norm(A, x, b)
            hist.append(res)
            if not np.isfinite(res) or res > MG_DIVERGENCE_FACTOR * r0:
                status = DIVERGED
                break
            if res <= tol:
                status = CONVERGED
                break
    costs = cycle_flops(h)
    info["flops_analytic"] = None if costs["analytic"] is None else costs["analytic"] * it
    info["flops_measured"] = costs["measured"] * it
    flops = info["flops_analytic"] if info["flops_analytic"] is not None else info["flops_measured"]
    return SolveReport(status, it, hist, float(flops), x, info)


def multigrid(problem: str, params: Optional[dict], spec: CycleSpec, tol: float = 2e-4,
              max_cycles: int = 500) -> SolveReport:
    """Build the hierarchy for a named problem and solve it."""
    return mg_solve(build_hierarchy(problem, spec, params), tol=tol, max_cycles=max_cycles)
