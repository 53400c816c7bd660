"""Region graphs and two-layer generalized Gaussian belief propagation.

Large regions (no parents) exchange block messages through small regions
(their pairwise and higher overlaps).  Each large-region update solves one
dense system ``Lam0 x_L = b0`` where ``Lam0``/``b0`` are the region's block
of ``A``/``b`` plus the messages the region's children receive from their
other parents; outgoing messages follow from the diagonal blocks of
``Lam0^{-1}``:

    S_l    = ([Lam0^{-1}]_l)^{-1}
    Lam_Ll = S_l - A_ll - sum_{L' != L} Lam_L'l
    m_Ll   = S_l x_l - b_l - sum_{L' != L} m_L'l

Messages use the ``m = Lam mu`` parametrisation so that singular ``Lam``
(one-way couplings) cause no trouble.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .report import CONVERGED, DIVERGED, MAX_ITER, SolveReport, diverging
from .sparse import SparseMatrix, as_matrix, extract_block, residual_inf_norm, spectral_radius


class RegionGraphError(ValueError):
    """Invalid region graph: uncovered base edges or broken counting numbers."""


class RegionBreakdown(ArithmeticError):
    def __init__(self, region: int, what: str = "singular region system"):
        super().__init__(f"{what} in large region {region}")
        self.region = region


def _undirected_edges(A: SparseMatrix) -> list:
    rows = A.row_indices()
    cols = A.col_indices
    off = rows != cols
    lo = np.minimum(rows[off], cols[off])
    hi = np.maximum(rows[off], cols[off])
    return sorted(set(zip(lo.tolist(), hi.tolist())))


# ---------------------------------------------------------------------------
# region graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegionGraph:
    """Directed acyclic region graph over variables ``0..n-1``.

    Attributes
    ----------
    n : int
        Number of base variables.
    regions : tuple of tuple of int
        Sorted variable sets.
    parents : tuple of tuple of int
        Region indices of each region's parents.
    counting : tuple of int
        Counting number per region.
    base_edges : tuple of (int, int)
        Undirected edges ``(u, v)``, ``u < v``, of the base graph.
    """

    n: int
    regions: tuple
    parents: tuple
    counting: tuple
    base_edges: tuple

    @classmethod
    def from_regions(cls, n: int, regions: Sequence[Iterable[int]], base_edges: Iterable,
                     edges: Optional[Iterable] = None, counting: Optional[Sequence[int]] = None
                     ) -> "RegionGraph":
        """Assemble a region graph.

        ``edges`` are ``(parent, child)`` index pairs into ``regions``; when
        omitted the containment Hasse diagram is used.  ``counting`` defaults
        to ``c_r = 1 - sum of ancestors' c``.
        """
        regs = tuple(tuple(sorted(set(int(v) for v in r))) for r in regions)
        if len(set(regs)) != len(regs):
            raise RegionGraphError("duplicate region")
        sets = [set(r) for r in regs]
        if edges is None:
            par: list = [[] for _ in regs]
            for c, sc in enumerate(sets):
                sup = [p for p, sp in enumerate(sets) if sc < sp]
                for p in sup:
                    if not any(sets[q] < sets[p] and sc < sets[q] for q in sup):
                        par[c].append(p)
        else:
            par = [[] for _ in regs]
            for p, c in edges:
                if not sets[c] < sets[p]:
                    raise RegionGraphError(f"region {regs[c]} is not a proper subset of {regs[p]}")
                par[c].append(p)
        parents = tuple(tuple(sorted(p)) for p in par)
        be = tuple(sorted((min(u, v), max(u, v)) for u, v in base_edges))
        rg = cls(n, regs, parents, tuple([0] * len(regs)), be)
        if counting is None:
            counting = rg.derived_counting()
        return cls(n, regs, parents, tuple(int(c) for c in counting), be)

    def __post_init__(self):
        kids: list = [[] for _ in self.parents]
        for c, ps in enumerate(self.parents):
            for p in ps:
                kids[p].append(c)
        # derived lookups, not part of the value
        object.__setattr__(self, "_children", tuple(tuple(k) for k in kids))
        object.__setattr__(self, "_memo", {})

    # structure queries -------------------------------------------------------

    def children(self, r: int) -> list:
        return list(self._children[r])

    def ancestors(self, r: int) -> set:
        out: set = set()
        stack = list(self.parents[r])
        while stack:
            p = stack.pop()
            if p not in out:
                out.add(p)
                stack.extend(self.parents[p])
        return out

    def descendants(self, r: int) -> set:
        out: set = set()
        stack = self.children(r)
        while stack:
            c = stack.pop()
            if c not in out:
                out.add(c)
                stack.extend(self.children(c))
        return out

    def shadow(self, r: int) -> set:
        return self.descendants(r) | {r}

    def blanket(self, r: int) -> set:
        s = self.shadow(r)
        return {p for q in s for p in self.parents[q]} - s

    def derived_counting(self) -> list:
        order = sorted(range(len(self.regions)), key=lambda r: len(self.ancestors(r)))
        c = [0] * len(self.regions)
        for r in order:
            c[r] = 1 - sum(c[a] for a in self.ancestors(r))
        return c

    @property
    def large(self) -> list:
        return [r for r, p in enumerate(self.parents) if not p]

    @property
    def small(self) -> list:
        return [r for r, p in enumerate(self.parents) if p]

    @property
    def is_two_layer(self) -> bool:
        large = set(self.large)
        return all(set(p) <= large for p in self.parents) and all(
            not self.children(s) for s in self.small)

    def index(self, region: Iterable[int]) -> int:
        return self.regions.index(tuple(sorted(region)))


@dataclass(frozen=True)
class CountingReport:
    valid: bool
    vertex_sums: np.ndarray
    edge_sums: dict
    bad_vertices: list
    bad_edges: list


def validate_counting(rg: RegionGraph) -> CountingReport:
    """Check that every vertex and base edge is counted exactly once."""
    vs = np.zeros(rg.n, dtype=np.int64)
    for reg, c in zip(rg.regions, rg.counting):
        vs[list(reg)] += c
    member: list = [set() for _ in range(rg.n)]
    for r, reg in enumerate(rg.regions):
        for v in reg:
            member[v].add(r)
    es = {}
    for u, v in rg.base_edges:
        es[(u, v)] = int(sum(rg.counting[r] for r in member[u] & member[v]))
    bad_v = [int(i) for i in np.nonzero(vs != 1)[0]]
    bad_e = [e for e, s in es.items() if s != 1]
    return CountingReport(not bad_v and not bad_e, vs, es, bad_v, bad_e)


def _components(nodes: list, adj: dict) -> list:
    left = set(nodes)
    out = []
    while left:
        start = min(left)
        comp, stack = {start}, [start]
        left.discard(start)
        while stack:
            u = stack.pop()
            for w in adj.get(u, ()):
                if w in left:
                    left.discard(w)
                    comp.add(w)
                    stack.append(w)
        out.append(sorted(comp))
    return out


def build_two_layer_region_graph(A, large_regions: Sequence[Iterable[int]]) -> RegionGraph:
    """Two-layer region graph with derived small regions.

    Vertices lying in two or more large regions are grouped by the exact
    set of large regions containing them; each connected group becomes a
    small region whose parents are exactly those large regions.

    Raises
    ------
    RegionGraphError
        If a vertex or a base edge is not covered by any large region, or
        if the derived counting numbers do not count every edge once.
    """
    A = as_matrix(A)
    large = [tuple(sorted(set(int(v) for v in L))) for L in large_regions]
    if not large:
        raise RegionGraphError("no large regions given")
    for L in large:
        if not L or L[0] < 0 or L[-1] >= A.n:
            raise RegionGraphError(f"large region {L} out of range")
    edges = _undirected_edges(A)
    adj: dict = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    member: list = [[] for _ in range(A.n)]
    for k, L in enumerate(large):
        for v in L:
            member[v].append(k)
    uncovered_v = [v for v in range(A.n) if not member[v]]
    if uncovered_v:
        raise RegionGraphError(f"vertices not covered by any large region: {uncovered_v[:10]}")
    sets = [set(L) for L in large]
    uncovered = [(u, v) for u, v in edges if not any(u in s and v in s for s in sets)]
    if uncovered:
        raise RegionGraphError(
            f"{len(uncovered)} base edges are covered by no large region, e.g. {uncovered[:5]}")
    for L in large:
        if len(_components(list(L), {u: [w for w in adj.get(u, ()) if w in set(L)] for u in L})) > 1:
            raise RegionGraphError(f"large region {L} is not connected")

    groups: dict = {}
    for v in range(A.n):
        if len(member[v]) > 1:
            groups.setdefault(tuple(member[v]), []).append(v)
    regions = list(large)
    parent_edges = []
    for sig, verts in sorted(groups.items(), key=lambda kv: kv[1][0]):
        vs = set(verts)
        sub = {u: [w for w in adj.get(u, ()) if w in vs] for u in verts}
        for comp in _components(verts, sub):
            c = len(regions)
            regions.append(tuple(comp))
            parent_edges.extend((p, c) for p in sig)
    rg = RegionGraph.from_regions(A.n, regions, edges, edges=parent_edges)
    rep = validate_counting(rg)
    if not rep.valid:
        raise RegionGraphError(
            f"counting numbers violated on vertices {rep.bad_vertices[:5]} and edges {rep.bad_edges[:5]}")
    return rg


def line_regions(nx: int, ny: Optional[int] = None) -> list:
    """All horizontal and vertical grid lines of an ``nx`` by ``ny`` grid (x fastest)."""
    ny = nx if ny is None else ny
    rows = [list(range(j * nx, (j + 1) * nx)) for j in range(ny)]
    cols = [list(range(i, nx * ny, nx)) for i in range(nx)]
    return rows + cols


def bethe_regions(A) -> list:
    """One large region per base edge ``{i, j}``."""
    return [list(e) for e in _undirected_edges(as_matrix(A))]


def save_regions(path, large_regions: Sequence[Iterable[int]]) -> None:
    with open(path, "w") as fh:
        for L in large_regions:
            fh.write(" ".join(str(v) for v in sorted(L)) + "\n")


def load_regions(path, A) -> RegionGraph:
    with open(path) as fh:
        large = [[int(t) for t in line.split()] for line in fh if line.strip()]
    return build_two_layer_region_graph(A, large)


# ---------------------------------------------------------------------------
# message engine
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _Plan:
    """Index bookkeeping for one two-layer region graph."""

    large: list           # global variable arrays per large region
    edges: list           # (large position, child position) per message slot
    child_vars: list      # global variable arrays per child
    child_local: list     # per slot: positions of the child's variables inside the parent
    slots_of_large: list  # message slots leaving each large region
    slots_into_child: list
    singleton: bool


def _plan(rg: RegionGraph) -> _Plan:
    if "plan" not in rg._memo:
        rg._memo["plan"] = _build_plan(rg)
    return rg._memo["plan"]


def _build_plan(rg: RegionGraph) -> _Plan:
    if not rg.is_two_layer:
        raise RegionGraphError("only two-layer region graphs are supported")
    large_ids = rg.large
    small_ids = rg.small
    lpos = {r: k for k, r in enumerate(large_ids)}
    spos = {r: k for k, r in enumerate(small_ids)}
    large = [np.array(rg.regions[r], dtype=np.int64) for r in large_ids]
    child_vars = [np.array(rg.regions[r], dtype=np.int64) for r in small_ids]
    edges, local = [], []
    slots_of_large: list = [[] for _ in large_ids]
    slots_into: list = [[] for _ in small_ids]
    for s in small_ids:
        for p in rg.parents[s]:
            e = len(edges)
            edges.append((lpos[p], spos[s]))
            local.append(np.searchsorted(large[lpos[p]], child_vars[spos[s]]))
            slots_of_large[lpos[p]].append(e)
            slots_into[spos[s]].append(e)
    singleton = all(v.size == 1 for v in child_vars)
    return _Plan(large, edges, child_vars, local,
                 [np.array(s, dtype=np.int64) for s in slots_of_large],
                 [np.array(s, dtype=np.int64) for s in slots_into], singleton)


@dataclass
class BlockMessageState:
    """Per parent-child edge block messages ``(Lambda, m)``.

    ``edges[e] = (L, l)`` indexes ``graph.large`` and ``graph.small``.
    """

    edges: list
    Lambda: list
    m: list

    @classmethod
    def zeros(cls, rg: RegionGraph) -> "BlockMessageState":
        plan = _plan(rg)
        sizes = [plan.child_vars[c].size for _, c in plan.edges]
        return cls(list(plan.edges), [np.zeros((k, k)) for k in sizes], [np.zeros(k) for k in sizes])

    def copy(self) -> "BlockMessageState":
        return BlockMessageState(list(self.edges), [L.copy() for L in self.Lambda],
                                 [v.copy() for v in self.m])

    def max_delta(self, other: "BlockMessageState") -> float:
        d = 0.0
        for a, b in zip(self.Lambda, other.Lambda):
            if a.size:
                d = max(d, float(np.max(np.abs(a - b))))
        for a, b in zip(self.m, other.m):
            if a.size:
                d = max(d, float(np.max(np.abs(a - b))))
        return d

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(L)) for L in self.Lambda) and all(
            np.all(np.isfinite(v)) for v in self.m)


class GeneralizedEngine:
    """Precomputed per-region blocks for repeated sweeps on one system matrix."""

    def __init__(self, A, rg: RegionGraph):
        self.A = as_matrix(A)
        if rg.n != self.A.n:
            raise ValueError("region graph and matrix sizes differ")
        self.rg = rg
        self.plan = _plan(rg)
        S = self.A.to_scipy()
        self.blocks = [S[idx][:, idx].toarray() for idx in self.plan.large]
        p = self.plan
        if p.singleton:
            d = self.A.diagonal()
            self.child_blocks = [d[idx].reshape(1, 1) for idx in p.child_vars]
        else:
            self.child_blocks = [S[idx][:, idx].toarray() for idx in p.child_vars]
        if p.singleton:
            self._child_of = np.array([c for _, c in p.edges], dtype=np.int64)
            self._child_var = np.array([v[0] for v in p.child_vars], dtype=np.int64)
            self._local = [np.array([p.child_local[e][0] for e in p.slots_of_large[k]], dtype=np.int64)
                           for k in range(len(p.large))]
            self._bands = [self._tridiagonal(B) for B in self.blocks]

    @staticmethod
    def _tridiagonal(B):
        """``(lower, diag, upper)`` if ``B`` is tridiagonal, else None."""
        n = B.shape[0]
        if n < 2 or np.count_nonzero(np.triu(B, 2)) or np.count_nonzero(np.tril(B, -2)):
            return None
        return (np.ascontiguousarray(np.diag(B, -1)), np.ascontiguousarray(np.diag(B)),
                np.ascontiguousarray(np.diag(B, 1)))

    # -- inner pieces ------------------------------------------------------

    def _others(self, state, e):
        """Sums of messages into child of slot ``e`` from its other parents."""
        _, c = self.plan.edges[e]
        k = self.plan.child_vars[c].size
        lam = np.zeros((k, k))
        m = np.zeros(k)
        for f in self.plan.slots_into_child[c]:
            if f != e:
                lam += state.Lambda[f]
                m += state.m[f]
        return lam, m

    def _accumulate(self, k, state, b):
        p = self.plan
        lam0 = self.blocks[k].copy()
        b0 = b[p.large[k]].copy()
        for e in p.slots_of_large[k]:
            lo, mo = self._others(state, e)
            loc = p.child_local[e]
            lam0[np.ix_(loc, loc)] += lo
            b0[loc] += mo
        return lam0, b0

    def region_update(self, k: int, state: BlockMessageState, b, out: BlockMessageState):
        """Woodbury-path update of large region ``k``; writes its messages into ``out``."""
        p = self.plan
        lam0, b0 = self._accumulate(k, state, b)
        try:
            lu = sla.lu_factor(lam0, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise RegionBreakdown(k) from exc
        if np.any(np.abs(np.diag(lu[0])) < 1e-300):
            raise RegionBreakdown(k)
        xL = sla.lu_solve(lu, b0)
        slots = p.slots_of_large[k]
        if slots.size:
            cols = np.unique(np.concatenate([p.child_local[e] for e in slots]))
            rhs = np.zeros((lam0.shape[0], cols.size))
            rhs[cols, np.arange(cols.size)] = 1.0
            inv_cols = sla.lu_solve(lu, rhs)
            colpos = {int(c): j for j, c in enumerate(cols)}
            for e in slots:
                loc = p.child_local[e]
                sub = inv_cols[np.ix_(loc, [colpos[int(c)] for c in loc])]
                try:
                    S = np.linalg.inv(sub)
                except np.linalg.LinAlgError as exc:
                    raise RegionBreakdown(k, "singular inverse block") from exc
                lo, mo = self._others(state, e)
                c = p.edges[e][1]
                out.Lambda[e] = S - self.child_blocks[c] - lo
                out.m[e] = S @ xL[loc] - b[p.child_vars[c]] - mo
        return xL

    def _sweep_singleton(self, state, b, flood):
        lam = np.array([L[0, 0] for L in state.Lambda]) if state.Lambda else np.zeros(0)
        mm = np.array([v[0] for v in state.m]) if state.m else np.zeros(0)
        new_l, new_m, x = self.sweep_flat(b, lam, mm, flood)
        out = BlockMessageState(list(state.edges), [np.array([[v]]) for v in new_l],
                                [np.array([v]) for v in new_m])
        return out, x

    def sweep_flat(self, b, lam, mm, flood: bool = False):
        """Sweep for singleton children with messages held as flat arrays.

        Returns new ``(lam, m, x)``; the inputs are not modified.
        """
        p = self.plan
        if not p.singleton:
            raise ValueError("flat messages need singleton small regions")
        b = np.asarray(b, dtype=np.float64)
        lam = np.array(lam, dtype=np.float64)
        mm = np.array(mm, dtype=np.float64)
        n_c = len(p.child_vars)
        tot_l = np.bincount(self._child_of, weights=lam, minlength=n_c)
        tot_m = np.bincount(self._child_of, weights=mm, minlength=n_c)
        new_l, new_m = lam.copy(), mm.copy()
        x = np.zeros(self.A.n)
        dchild = self.A.diagonal()[self._child_var] if n_c else np.zeros(0)
        for k in range(len(p.large)):
            slots = p.slots_of_large[k]
            loc = self._local[k]
            ch = self._child_of[slots]
            oth_l = tot_l[ch] - lam[slots]
            oth_m = tot_m[ch] - mm[slots]
            b0 = b[p.large[k]].copy()
            b0[loc] += oth_m
            xL, dinv = self._solve_region(k, loc, oth_l, b0)
            x[p.large[k]] = xL
            if slots.size:
                if np.any(np.abs(dinv) < 1e-300):
                    raise RegionBreakdown(k, "singular inverse block")
                S = 1.0 / dinv
                nl = S - dchild[ch] - oth_l
                nm = S * xL[loc] - b[self._child_var[ch]] - oth_m
                new_l[slots] = nl
                new_m[slots] = nm
                if not flood:
                    np.add.at(tot_l, ch, nl - lam[slots])
                    np.add.at(tot_m, ch, nm - mm[slots])
                    lam[slots] = nl
                    mm[slots] = nm
        return new_l, new_m, x

    def _solve_region(self, k, loc, add_diag, b0):
        """Region mean and the diagonal of the region inverse at ``loc``."""
        bands = self._bands[k]
        if bands is not None:
            lower, diag, upper = bands
            diag = diag.copy()
            diag[loc] += add_diag
            n = diag.size
            xL, dall = np.empty(n), np.empty(n)
            if not _kernels.tridiag_solve_invdiag(lower, diag, upper, b0, xL, dall, np.empty((3, n))):
                raise RegionBreakdown(k)
            return xL, dall[loc]
        lam0 = self.blocks[k].copy()
        lam0[loc, loc] += add_diag
        try:
            lu = sla.lu_factor(lam0)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise RegionBreakdown(k) from exc
        if np.any(np.abs(np.diag(lu[0])) < 1e-300):
            raise RegionBreakdown(k)
        xL = sla.lu_solve(lu, b0)
        rhs = np.zeros((lam0.shape[0], loc.size))
        rhs[loc, np.arange(loc.size)] = 1.0
        return xL, sla.lu_solve(lu, rhs)[loc, np.arange(loc.size)]

    def sweep(self, b, state: BlockMessageState, flood: bool = False):
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.A.n,):
            raise ValueError("right-hand side has the wrong size")
        if self.plan.singleton:
            return self._sweep_singleton(state, b, flood)
        x = np.zeros(self.A.n)
        out = state.copy()
        src = state if flood else out
        for k in range(len(self.plan.large)):
            x[self.plan.large[k]] = self.region_update(k, src, b, out)
        return out, x

    def small_region_beliefs(self, b, state: BlockMessageState) -> list:
        """Mean of every small region's belief, ``(A_ll + sum Lam)^{-1}(b_l + sum m)``."""
        b = np.asarray(b, dtype=np.float64)
        out = []
        for c, idx in enumerate(self.plan.child_vars):
            lam = self.child_blocks[c].copy()
            m = b[idx].copy()
            for e in self.plan.slots_into_child[c]:
                lam += state.Lambda[e]
                m += state.m[e]
            out.append(np.linalg.solve(lam, m))
        return out


def generalized_sweep(A, b, rg: RegionGraph, state: BlockMessageState, flood: bool = False,
                      engine: Optional[GeneralizedEngine] = None):
    """One pass over all large regions.

    Sequential by default (each region sees messages already refreshed in
    this sweep); ``flood=True`` updates every region from the incoming
    snapshot.  The returned ``x`` takes each variable from the last large
    region containing it.

    Raises
    ------
    RegionBreakdown
        If a region system or an inverse block is singular.
    """
    engine = engine or GeneralizedEngine(A, rg)
    return engine.sweep(b, state, flood=flood)


def generalized_solve(A, b, rg: RegionGraph, tol: float = 1e-8, max_iter: int = 1000,
                      flood: bool = False, stop: str = "residual",
                      message_tol: float = 1e-12) -> SolveReport:
    """Iterate :func:`generalized_sweep` from zero messages."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    engine = GeneralizedEngine(A, rg)
    state = BlockMessageState.zeros(rg)
    x = np.zeros(A.n)
    r0 = residual_inf_norm(A, x, b)
    hist, deltas = [r0], []
    status, info, it = MAX_ITER, {}, 0
    for it in range(1, max_iter + 1):
        try:
            new, x = engine.sweep(b, state, flood=flood)
        except RegionBreakdown as exc:
            status = DIVERGED
            info["region"] = exc.region
            hist.append(float("inf"))
            break
        deltas.append(new.max_delta(state))
        state = new
        res = residual_inf_norm(A, x, b)
        hist.append(res)
        if diverging(res, r0) or not state.is_finite():
            status = DIVERGED
            break
        if (stop == "residual" and res <= tol) or (stop == "message" and deltas[-1] < message_tol):
            status = CONVERGED
            break
    info["message_delta"] = deltas
    info["state"] = state
    flops = flop_count_region(rg)["total"] * it
    return SolveReport(status, it, hist, flops, x, info)


def naive_message_update(A, b, rg: RegionGraph, state: BlockMessageState, edge: int):
    """Message on slot ``edge`` from the explicit modified-covariance formula.

    Builds ``Sigma~^{-1} = Lam0 - ]A_l + sum_{L' != L} Lam_L'l[_l`` and the
    matching right-hand side, then returns ``(([Sigma~]_l)^{-1},
    Lam_Ll [Sigma~ b~]_l)``.  Meant as a cross-check of the fast path.
    """
    engine = GeneralizedEngine(A, rg)
    b = np.asarray(b, dtype=np.float64)
    p = engine.plan
    k, c = p.edges[edge]
    lam0, b0 = engine._accumulate(k, state, b)
    lo, mo = engine._others(state, edge)
    loc = p.child_local[edge]
    lam_l = engine.child_blocks[c] + lo
    b_l = b[p.child_vars[c]] + mo
    sig_inv = lam0.copy()
    sig_inv[np.ix_(loc, loc)] -= lam_l
    bt = b0.copy()
    bt[loc] -= b_l
    try:
        sigma = np.linalg.inv(sig_inv)
        Lam = np.linalg.inv(sigma[np.ix_(loc, loc)])
    except np.linalg.LinAlgError as exc:
        raise RegionBreakdown(k, "singular modified covariance") from exc
    mu = (sigma @ bt)[loc]
    return Lam, Lam @ mu


def small_region_beliefs(A, b, rg: RegionGraph, state: BlockMessageState) -> list:
    return GeneralizedEngine(A, rg).small_region_beliefs(b, state)


# ---------------------------------------------------------------------------
# cost model
# ---------------------------------------------------------------------------


def flop_count_region(rg: RegionGraph, mode: str = "algorithm2") -> dict:
    """Operation estimate per large region for one sweep.

    ``"algorithm2"`` counts one factorisation per large region plus one
    small inverse per child; ``"naive"`` re-factorises the modified region
    matrix for every child.  Values are kept fractional.
    """
    if mode not in ("algorithm2", "naive"):
        raise ValueError("mode must be 'algorithm2' or 'naive'")
    per = []
    for L in rg.large:
        N = len(rg.regions[L])
        kids = rg.children(L)
        M = len(kids)
        n = np.array([len(rg.regions[c]) for c in kids], dtype=float)
        pp = np.array([len(rg.parents[c]) for c in kids], dtype=float)
        share = float(np.sum(n * (n + 1) * (pp - 1)))
        cube = float(np.sum(1.5 * n ** 3))
        if mode == "algorithm2":
            per.append(cube + 2 * share + 1.5 * N ** 3)
        else:
            per.append(cube + (M - 1) * share + M * 1.5 * N ** 3)
    return {"per_region": per, "total": float(sum(per))}


# ---------------------------------------------------------------------------
# block elimination view and block convergence check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(v) for v in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if any(len(b) == 0 for b in blocks):
            raise ValueError("empty block")
        flat = [v for b in blocks for v in b]
        if len(flat) != len(set(flat)):
            raise ValueError("blocks overlap")
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("blocks do not cover 0..n-1")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @classmethod
    def scalar(cls, n: int) -> "BlockPartition":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def from_region_graph(cls, rg: RegionGraph) -> "BlockPartition":
        """Children plus the parts of large regions left uncovered by children."""
        blocks = [rg.regions[s] for s in rg.small]
        for L in rg.large:
            rest = set(rg.regions[L]) - {v for c in rg.children(L) for v in rg.regions[c]}
            if rest:
                blocks.append(tuple(sorted(rest)))
        return cls(tuple(blocks))


@dataclass(frozen=True)
class BlockConditionReport:
    rho: float
    sufficient: bool
    norm_matrix: np.ndarray
    norm: str
    singular_block: Optional[int] = None


def check_block_convergence(A, partition: BlockPartition, norm: str = "inf") -> BlockConditionReport:
    """Spectral radius of the block-norm matrix ``||I_ij - A_ii^{-1} A_ij||``."""
    if norm not in ("inf", "spectral"):
        raise ValueError("norm must be 'inf' or 'spectral'")
    A = as_matrix(A)
    if partition.n != A.n:
        raise ValueError("partition does not match the matrix size")
    S = A.to_scipy()
    K = len(partition.blocks)
    idx = [np.array(b) for b in partition.blocks]
    N = np.zeros((K, K))
    ord_ = np.inf if norm == "inf" else 2
    for i in range(K):
        Aii = S[idx[i]][:, idx[i]].toarray()
        try:
            lu = sla.lu_factor(Aii)
        except (ValueError, np.linalg.LinAlgError):
            return BlockConditionReport(np.inf, False, N, norm, i)
        if np.any(np.diag(lu[0]) == 0):
            return BlockConditionReport(np.inf, False, N, norm, i)
        for j in range(K):
            if i == j:
                continue
            Aij = S[idx[i]][:, idx[j]].toarray()
            if np.any(Aij):
                N[i, j] = np.linalg.norm(sla.lu_solve(lu, Aij), ord_)
    rho = spectral_radius(N).value
    return BlockConditionReport(rho, rho < 1, N, norm)


def schur_correction(A, b, jbar: Sequence[int], k: Sequence[int]):
    """Corrections region ``jbar`` sends to the overlap ``k`` by eliminating ``jbar``.

    Returns ``(-A_kj A_jj^{-1} A_jk, -A_kj A_jj^{-1} b_j)``.
    """
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    Ajj = extract_block(A, jbar, jbar).data
    Akj = extract_block(A, k, jbar).data
    Ajk = extract_block(A, jbar, k).data
    return -Akj @ np.linalg.solve(Ajj, Ajk), -Akj @ np.linalg.solve(Ajj, b[list(jbar)])


def block_lu(A, jbar: Sequence[int], k: Sequence[int]):
    """Two-block LU factors of ``[[A_jj, A_jk], [A_kj, A_kk]]``."""
    A = as_matrix(A)
    Ajj = extract_block(A, jbar, jbar).data
    Ajk = extract_block(A, jbar, k).data
    Akj = extract_block(A, k, jbar).data
    Akk = extract_block(A, k, k).data
    nj, nk = len(jbar), len(k)
    Lf = np.block([[np.eye(nj), np.zeros((nj, nk))], [Akj @ np.linalg.inv(Ajj), np.eye(nk)]])
    Uf = np.block([[Ajj, Ajk], [np.zeros((nk, nj)), Akk - Akj @ np.linalg.solve(Ajj, Ajk)]])
    return Lf, Uf
