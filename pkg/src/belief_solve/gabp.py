"""Gaussian belief propagation for general (nonsymmetric) invertible systems.

Messages are kept in the reparametrised form ``(lam, m)`` per directed edge:
``lam_ji`` is the precision correction node ``j`` sends to node ``i`` scaled
by ``1 / A_ji`` and ``m_ji`` the corresponding right-hand-side correction.
With this scaling the rules never divide by an off-diagonal entry, so
one-way couplings (``A_ij != 0`` but ``A_ji == 0``) are handled naturally:

    lam_ji = -A_ij / (A_jj + sum_{k in N(j) \\ i} lam_kj A_kj)
    m_ji   =  lam_ji (b_j + sum_{k in N(j) \\ i} m_kj)
    x_i    = (b_i + sum_j m_ji) / (A_ii + sum_j lam_ji A_ji)

An edge ``j -> i`` exists exactly when ``A_ij`` is stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .ordering import Schedule
from .report import CONVERGED, DIVERGED, MAX_ITER, SolveReport, diverging
from .sparse import SparseMatrix, as_matrix, residual_inf_norm

PIVOT_FLOOR = 1e-300


class PivotBreakdown(ArithmeticError):
    """A node precision or message denominator fell below the pivot floor."""

    def __init__(self, node: int):
        super().__init__(f"pivot breakdown at node {node}")
        self.node = node


@dataclass(frozen=True, eq=False)
class MessageGraph:
    """Directed message graph of a square matrix (see module docstring for layout)."""

    n: int
    recv: np.ndarray
    send: np.ndarray
    aval: np.ndarray
    arev: np.ndarray
    rev: np.ndarray
    in_ptr: np.ndarray
    out_ptr: np.ndarray
    out_edges: np.ndarray
    diag: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.recv.size)

    def edges(self) -> list:
        """Directed edges as ``(sender, receiver)`` pairs."""
        return list(zip(self.send.tolist(), self.recv.tolist()))

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def edge_index(self, sender: int, receiver: int) -> int:
        lo, hi = self.in_ptr[receiver], self.in_ptr[receiver + 1]
        hit = np.nonzero(self.send[lo:hi] == sender)[0]
        if hit.size == 0:
            raise KeyError(f"no edge {sender} -> {receiver}")
        return int(lo + hit[0])


def build_message_graph(A) -> MessageGraph:
    """Edges ``j -> i`` for every stored off-diagonal ``A_ij``."""
    A = as_matrix(A)
    rows = A.row_indices()
    cols = A.col_indices
    off = rows != cols
    slot = np.full(A.nnz, -1, dtype=np.int64)
    slot[off] = np.arange(int(off.sum()))
    tpos = A.transpose_positions()[off]
    rev = np.where(tpos >= 0, slot[np.maximum(tpos, 0)], -1)
    arev = np.where(tpos >= 0, A.values[np.maximum(tpos, 0)], 0.0)
    recv = rows[off]
    send = cols[off]
    in_ptr = np.zeros(A.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(recv, minlength=A.n), out=in_ptr[1:])
    out_edges = np.argsort(send, kind="stable").astype(np.int64)
    out_ptr = np.zeros(A.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(send, minlength=A.n), out=out_ptr[1:])
    return MessageGraph(A.n, recv, send, A.values[off].copy(), arev, rev.astype(np.int64),
                        in_ptr, out_ptr, out_edges, A.diagonal().astype(np.float64))


@dataclass
class MessageState:
    """Per-edge message pair; slot layout follows :class:`MessageGraph`."""

    lam: np.ndarray
    m: np.ndarray

    @classmethod
    def zeros(cls, graph: MessageGraph) -> "MessageState":
        return cls(np.zeros(graph.n_edges), np.zeros(graph.n_edges))

    def copy(self) -> "MessageState":
        return MessageState(self.lam.copy(), self.m.copy())

    def max_delta(self, other: "MessageState") -> float:
        if self.lam.size == 0:
            return 0.0
        return float(max(np.max(np.abs(self.lam - other.lam)), np.max(np.abs(self.m - other.m))))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lam)) and np.all(np.isfinite(self.m)))


@dataclass(frozen=True, eq=False)
class FrozenLambda:
    """Precision messages of a cold solve, recorded sweep by sweep.

    The precision recurrence does not involve the right-hand side, so the
    precisions seen in sweep ``s`` of any solve started from zero messages
    are the same for every ``b``.  Replaying them lets later solves update
    only ``m`` while reproducing the cold iterates exactly.

    Attributes
    ----------
    lam : ndarray
        Per-edge ``lam`` after the last recorded sweep.
    sigma : ndarray
        Node precisions after the last recorded sweep.
    converged : bool
        Whether the precision recurrence met its tolerance.
    sweeps : int
        Sweeps recorded.
    lam_steps, sigma_steps : tuple of ndarray
        ``lam`` after sweep ``s`` and the precision each node used during
        sweep ``s`` (index ``s - 1``).
    """

    lam: np.ndarray
    sigma: np.ndarray
    converged: bool
    sweeps: int
    lam_steps: tuple = ()
    sigma_steps: tuple = ()

    def at(self, sweep: Optional[int]):
        """``(lam, sigma)`` for 1-based ``sweep``; the last record beyond the end."""
        if sweep is None or not self.lam_steps:
            return self.lam, self.sigma
        k = min(max(sweep, 1), len(self.lam_steps)) - 1
        return self.lam_steps[k], self.sigma_steps[k]


def _graph(A) -> MessageGraph:
    if isinstance(A, MessageGraph):
        return A
    A = as_matrix(A)
    if "message_graph" not in A._cache:
        A._cache["message_graph"] = build_message_graph(A)
    return A._cache["message_graph"]


def gabp_sweep(A, b, state: MessageState, schedule: Optional[Schedule] = None,
               frozen: Optional[FrozenLambda] = None, floor: float = PIVOT_FLOOR,
               sweep: Optional[int] = None, sigma_out: Optional[np.ndarray] = None):
    """One sweep of message updates.

    Sequential kinds update in place using the freshest messages; the flood
    kind computes every new message from the incoming snapshot and then
    evaluates ``x`` from the new messages.  With ``frozen`` given only ``m``
    is updated, using the precisions recorded for 1-based ``sweep`` (the
    final ones when ``sweep`` is None).  ``sigma_out`` receives the node
    precisions used in the sweep.

    Returns
    -------
    state : MessageState
        Updated messages (the same object for sequential kinds).
    x : ndarray
        Node estimates produced during the sweep.

    Raises
    ------
    PivotBreakdown
        If a denominator's magnitude drops below ``floor``.
    """
    g = _graph(A)
    schedule = schedule or Schedule.lexicographic()
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.shape != (g.n,):
        raise ValueError(f"b has shape {b.shape}, expected ({g.n},)")
    x = np.empty(g.n)
    update_lam = frozen is None
    if update_lam:
        lam, sigma = state.lam, g.diag
    else:
        lam, sigma = frozen.at(sweep)
    s_out = np.empty(g.n) if sigma_out is None else sigma_out
    if schedule.sequential:
        bad = _kernels.gabp_sequential(schedule.node_order(g.n), g.in_ptr, g.aval, g.arev, g.rev,
                                       g.out_ptr, g.out_edges, g.diag, b, lam, state.m, x,
                                       floor, update_lam, sigma, s_out)
        out = state
        if not update_lam:
            out.lam = lam
    else:
        new = MessageState(np.empty_like(lam), np.empty_like(state.m))
        bad = _kernels.gabp_flood(g.n, g.in_ptr, g.aval, g.arev, g.rev, g.out_ptr, g.out_edges,
                                  g.diag, b, lam, state.m, new.lam, new.m, x, floor,
                                  update_lam, sigma)
        out = new
        if sigma_out is not None:
            _kernels.node_precisions(g.n, g.in_ptr, g.arev, g.diag, new.lam, sigma_out)
    if bad >= 0:
        raise PivotBreakdown(int(bad))
    return out, x


def sweep_flops(A, frozen: bool = False) -> int:
    """Operation count of one sweep, one multiply or add per unit.

    Cold sweeps accumulate ``m`` and ``Sigma`` (3 per incoming edge), divide
    once, and spend 5 per outgoing message; with frozen precisions only
    ``m`` is accumulated and each outgoing message costs 2.
    """
    g = _graph(A)
    if frozen:
        return 3 * g.n_edges + g.n
    return 8 * g.n_edges + g.n


def gabp_solve(A, b, schedule: Optional[Schedule] = None, tol: float = 1e-8,
               max_iter: int = 1000, stop: str = "residual", message_tol: float = 1e-12,
               frozen: Optional[FrozenLambda] = None, floor: float = PIVOT_FLOOR,
               state: Optional[MessageState] = None) -> SolveReport:
    """Iterate :func:`gabp_sweep` from zero messages.

    Parameters
    ----------
    stop : {"residual", "message"}
        ``"residual"`` stops when ``||b - A x||_inf <= tol``; ``"message"``
        stops when the largest per-edge message change in a sweep is below
        ``message_tol``.
    frozen : FrozenLambda, optional
        Reuse precomputed precision messages (see :func:`precompute_lambda`).

    Returns
    -------
    SolveReport
        ``info`` holds ``message_delta`` (per sweep) and, on breakdown, the
        offending ``node``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if stop not in ("residual", "message"):
        raise ValueError("stop must be 'residual' or 'message'")
    A = as_matrix(A)
    g = _graph(A)
    b = np.asarray(b, dtype=np.float64)
    schedule = schedule or Schedule.lexicographic()
    state = state if state is not None else MessageState.zeros(g)
    x = np.zeros(g.n)
    r0 = residual_inf_norm(A, x, b)
    history = [r0]
    deltas = []
    per_sweep = sweep_flops(g, frozen is not None)
    status = MAX_ITER
    info: dict = {}
    it = 0
    for it in range(1, max_iter + 1):
        prev = state.copy()
        try:
            state, x = gabp_sweep(g, b, state, schedule, frozen=frozen, floor=floor, sweep=it)
        except PivotBreakdown as exc:
            status = DIVERGED
            info["node"] = exc.node
            history.append(float("inf"))
            break
        res = residual_inf_norm(A, x, b)
        history.append(res)
        delta = state.max_delta(prev)
        deltas.append(delta)
        if diverging(res, r0) or not state.is_finite():
            status = DIVERGED
            break
        if (stop == "residual" and res <= tol) or (stop == "message" and delta < message_tol):
            status = CONVERGED
            break
    info["message_delta"] = deltas
    info["state"] = state
    return SolveReport(status, it if max_iter > 0 else 0, history, float(per_sweep * it), x, info)


def precompute_lambda(A, schedule: Optional[Schedule] = None, tol: float = 1e-10,
                      max_iter: int = 500, floor: float = PIVOT_FLOOR) -> FrozenLambda:
    """Iterate only the precision recurrence, which does not involve ``b``.

    Records ``lam`` and the node precisions of every sweep and stops when
    the largest change of ``lam`` over a sweep is below ``tol``.
    """
    g = _graph(A)
    schedule = schedule or Schedule.lexicographic()
    state = MessageState.zeros(g)
    zero = np.zeros(g.n)
    converged = False
    sweeps = 0
    lams, sigmas = [], []
    for sweeps in range(1, max_iter + 1):
        before = state.lam.copy()
        sig = np.empty(g.n)
        state, _ = gabp_sweep(g, zero, state, schedule, floor=floor, sigma_out=sig)
        if not np.all(np.isfinite(state.lam)):
            break
        lams.append(state.lam.copy())
        sigmas.append(sig)
        if before.size == 0 or np.max(np.abs(state.lam - before)) < tol:
            converged = True
            break
    sigma = np.empty(g.n)
    _kernels.node_precisions(g.n, g.in_ptr, g.arev, g.diag, state.lam, sigma)
    return FrozenLambda(state.lam.copy(), sigma, converged, sweeps, tuple(lams), tuple(sigmas))


def error_correction_apply(A, b, x0, sweeps: int, frozen: Optional[FrozenLambda] = None,
                           schedule: Optional[Schedule] = None,
                           floor: float = PIVOT_FLOOR) -> np.ndarray:
    """Return ``x0 + e`` where ``e`` comes from ``sweeps`` sweeps on ``A e = b - A x0``.

    Messages start from zero on every call.
    """
    A = as_matrix(A)
    g = _graph(A)
    x0 = np.asarray(x0, dtype=np.float64)
    r = np.asarray(b, dtype=np.float64) - A.matvec(x0)
    state = MessageState.zeros(g)
    e = np.zeros(g.n)
    for s in range(1, sweeps + 1):
        state, e = gabp_sweep(g, r, state, schedule, frozen=frozen, floor=floor, sweep=s)
    return x0 + e


def error_correction_solve(A, b, sweeps: int, schedule: Optional[Schedule] = None,
                           tol: float = 2e-4, max_iter: int = 10_000, frozen: Optional[FrozenLambda] = None,
                           floor: float = PIVOT_FLOOR) -> SolveReport:
    """Repeat :func:`error_correction_apply` until ``||b - A x||_inf <= tol``.

    Precision messages are precomputed once when ``frozen`` is not given.
    One iteration is one call with ``sweeps`` sweeps.
    """
    A = as_matrix(A)
    g = _graph(A)
    b = np.asarray(b, dtype=np.float64)
    schedule = schedule or Schedule.lexicographic()
    if frozen is None:
        frozen = precompute_lambda(A, schedule, floor=floor)
    x = np.zeros(g.n)
    r0 = residual_inf_norm(A, x, b)
    history = [r0]
    status, it, info = MAX_ITER, 0, {}
    if r0 <= tol:
        return SolveReport(CONVERGED, 0, history, 0.0, x)
    for it in range(1, max_iter + 1):
        try:
            x = error_correction_apply(A, b, x, sweeps, frozen, schedule, floor)
        except PivotBreakdown as exc:
            status = DIVERGED
            info["node"] = exc.node
            history.append(float("inf"))
            break
        res = residual_inf_norm(A, x, b)
        history.append(res)
        if diverging(res, r0):
            status = DIVERGED
            break
        if res <= tol:
            status = CONVERGED
            break
    per_call = sweep_flops(g, True) * sweeps + 2 * A.nnz + 2 * g.n
    return SolveReport(status, it, history, float(per_call * it), x, info)
