"""Classical relaxation smoothers and unpreconditioned BiCGSTAB.

Point kinds work on any matrix; colored and line kinds need the grid shape
(``nx`` unknowns along x, ``ny`` along y, x fastest).  Line kinds solve every
line of a group exactly: groups are single lines for x/y-line GS and all
lines of one parity for the zebra variants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _kernels
from .ordering import grid_colors
from .report import CONVERGED, DIVERGED, MAX_ITER, SolveReport, diverging
from .sparse import SparseMatrix, as_matrix, residual_inf_norm

BREAKDOWN = "breakdown"

POINT_KINDS = ("jacobi", "gs", "rb-gs", "4c-gs")
LINE_KINDS = ("x-line", "y-line", "zebra", "zebra-y", "alt-zebra")
KINDS = POINT_KINDS + LINE_KINDS


@dataclass(frozen=True)
class SmootherConfig:
    """Which baseline to run and on what grid.

    ``zebra`` relaxes x-lines (fixed y) in two parity groups; ``zebra-y``
    does the same for y-lines; ``alt-zebra`` performs a zebra x-sweep
    followed by a zebra y-sweep.
    """

    kind: str
    nx: Optional[int] = None
    ny: Optional[int] = None
    omega: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown smoother {self.kind!r}; expected one of {KINDS}")
        if self.kind not in ("jacobi", "gs") and self.nx is None:
            raise ValueError(f"{self.kind} needs the grid shape (nx, ny)")


def _x_lines(nx, ny):
    return [np.arange(j * nx, (j + 1) * nx) for j in range(ny)]


def _y_lines(nx, ny):
    return [np.arange(i, nx * ny, nx) for i in range(nx)]


class _Group:
    """Exact solve of ``A[idx, idx]`` with everything else frozen."""

    def __init__(self, S: sp.csr_matrix, idx: np.ndarray):
        self.idx = np.sort(idx)
        rows = S[self.idx]
        block = rows[:, self.idx].tocsc()
        mask = np.ones(S.shape[0], dtype=bool)
        mask[self.idx] = False
        self.rest = rows[:, np.nonzero(mask)[0]]
        self.rest_cols = np.nonzero(mask)[0]
        try:
            self.lu = splu(block)
        except RuntimeError as exc:
            raise ZeroDivisionError("singular line system") from exc

    def apply(self, b, x):
        x[self.idx] = self.lu.solve(b[self.idx] - self.rest @ x[self.rest_cols])


class Relaxer:
    """Precomputed smoother: call with ``(b, x, sweeps)`` to get the new iterate."""

    def __init__(self, A, config: SmootherConfig):
        self.A = as_matrix(A)
        self.config = config
        d = self.A.diagonal()
        if np.any(d == 0):
            raise ZeroDivisionError("zero on the diagonal")
        self.diag = d
        kind, nx = config.kind, config.nx
        ny = config.ny if config.ny is not None else nx
        if nx is not None and nx * ny != self.A.n:
            raise ValueError(f"grid {nx}x{ny} does not match n={self.A.n}")
        self.order = None
        self.groups: list = []
        if kind == "gs":
            self.order = np.arange(self.A.n, dtype=np.int64)
        elif kind in ("rb-gs", "4c-gs"):
            colors = grid_colors(nx, ny, "red-black" if kind == "rb-gs" else "four-color")
            self.order = np.argsort(colors, kind="stable").astype(np.int64)
        elif kind in LINE_KINDS:
            S = self.A.to_scipy()
            xl, yl = _x_lines(nx, ny), _y_lines(nx, ny)

            def zebra(lines):
                return [np.concatenate(lines[0::2]), np.concatenate(lines[1::2])]
            if kind == "x-line":
                sets = xl
            elif kind == "y-line":
                sets = yl
            elif kind == "zebra":
                sets = zebra(xl)
            elif kind == "zebra-y":
                sets = zebra(yl)
            else:
                sets = zebra(xl) + zebra(yl)
            self.groups = [_Group(S, idx) for idx in sets]

    def __call__(self, b, x, sweeps: int = 1) -> np.ndarray:
        b = np.ascontiguousarray(b, dtype=np.float64)
        x = np.array(x, dtype=np.float64, copy=True)
        kind = self.config.kind
        if kind == "jacobi":
            for _ in range(sweeps):
                x += self.config.omega * (b - self.A.matvec(x)) / self.diag
        elif self.order is not None:
            _kernels.gauss_seidel(self.order, self.A.row_offsets, self.A.col_indices,
                                  self.A.values, self.diag, b, x, sweeps)
        else:
            for _ in range(sweeps):
                for g in self.groups:
                    g.apply(b, x)
        return x

    def flops_per_sweep(self) -> float:
        """Multiply-add count of one sweep (two per stored entry, one division per row)."""
        per_row = 2 * self.A.nnz + self.A.n
        if self.config.kind == "alt-zebra":
            return 2.0 * per_row
        return float(per_row)


def relax(kind: str, A, b, x, sweeps: int = 1, nx: Optional[int] = None,
          ny: Optional[int] = None) -> np.ndarray:
    """Apply ``sweeps`` sweeps of the named smoother; returns a new vector."""
    return Relaxer(A, SmootherConfig(kind, nx, ny))(b, x, sweeps)


def relax_solve(kind: str, A, b, tol: float = 2e-4, max_iter: int = 10_000,
                nx: Optional[int] = None, ny: Optional[int] = None, x0=None) -> SolveReport:
    """Run a smoother as a stand-alone iteration from ``x0`` (zero by default)."""
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    R = Relaxer(A, SmootherConfig(kind, nx, ny))
    x = np.zeros(A.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r0 = residual_inf_norm(A, x, b)
    hist = [r0]
    status, it = MAX_ITER, 0
    if r0 <= tol:
        return SolveReport(CONVERGED, 0, hist, 0.0, x)
    for it in range(1, max_iter + 1):
        x = R(b, x, 1)
        res = residual_inf_norm(A, x, b)
        hist.append(res)
        if diverging(res, r0):
            status = DIVERGED
            break
        if res <= tol:
            status = CONVERGED
            break
    return SolveReport(status, it, hist, R.flops_per_sweep() * it, x)


def bicgstab(A, b, tol: float = 2e-4, max_iter: int = 10_000, x0=None,
             breakdown_tol: float = 1e-300) -> SolveReport:
    """Unpreconditioned BiCGSTAB stopped on the infinity norm of the residual.

    ``status`` is ``"breakdown"`` when ``rho`` or ``omega`` vanish.
    """
    A = as_matrix(A)
    M = A.to_scipy()
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(A.n) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    r = b - M @ x
    hist = [float(np.max(np.abs(r))) if A.n else 0.0]
    flops_iter = 2 * (2 * A.nnz) + 12 * A.n + 4 * 2 * A.n
    if hist[0] <= tol:
        return SolveReport(CONVERGED, 0, hist, 0.0, x)
    rhat = r.copy()
    rho_old = alpha = omega = 1.0
    v = np.zeros(A.n)
    p = np.zeros(A.n)
    status, it, info = MAX_ITER, 0, {}
    for it in range(1, max_iter + 1):
        rho = rhat @ r
        if abs(rho) < breakdown_tol:
            status, info["reason"] = BREAKDOWN, "rho"
            hist.append(hist[-1])
            break
        beta = (rho / rho_old) * (alpha / omega)
        p = r + beta * (p - omega * v)
        v = M @ p
        den = rhat @ v
        if abs(den) < breakdown_tol:
            status, info["reason"] = BREAKDOWN, "rhat.v"
            hist.append(hist[-1])
            break
        alpha = rho / den
        s = r - alpha * v
        if np.max(np.abs(s)) <= tol:
            x = x + alpha * p
            hist.append(float(np.max(np.abs(b - M @ x))))
            if hist[-1] <= tol:
                status = CONVERGED
                break
            r = b - M @ x
            rho_old = rho
            continue
        t = M @ s
        tt = t @ t
        omega = (t @ s) / tt if tt > 0 else 0.0
        x = x + alpha * p + omega * s
        r = s - omega * t
        res = float(np.max(np.abs(r)))
        hist.append(res)
        if not np.isfinite(res) or diverging(res, hist[0]):
            status = DIVERGED
            break
        if res <= tol:
            true = float(np.max(np.abs(b - M @ x)))
            if true <= tol:
                hist[-1] = true
                status = CONVERGED
                break
        if abs(omega) < breakdown_tol:
            status, info["reason"] = BREAKDOWN, "omega"
            break
        rho_old = rho
    return SolveReport(status, it, hist, float(flops_iter * it), x, info)
