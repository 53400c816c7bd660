"""Operation counts per unknown for smoothers on 5- and 9-point stencils.

Boundary effects are neglected throughout.  ``k`` is the number of
neighbours a stencil couples to (4 or 8).  A single sequential sweep only
receives from already visited neighbours and only sends to unvisited ones,
so the first sweep of a cold solve pays half the accumulation and update
work; every later sweep pays it in full.
"""

from __future__ import annotations

import numpy as np

from ..sparse import as_matrix

STENCILS = {"5pt": 4, "9pt": 8}
SMOOTHERS = ("gabp", "line-gabp", "gs", "xy-gs")


def _k(stencil: str) -> int:
    try:
        return STENCILS[stencil]
    except KeyError:
        raise ValueError(f"unknown stencil {stencil!r}; expected '5pt' or '9pt'") from None


def gabp_breakdown(stencil: str, frozen: bool) -> dict:
    """Stage-by-stage cost of one error-correction sweep started from zero messages."""
    k = _k(stencil)
    half = k // 2
    if frozen:
        stages = {"accumulate": half, "update": 2 * half, "terminate": 1}
    else:
        stages = {"accumulate": half + 2 * half, "update": 5 * half, "terminate": 1}
    stages["residual"] = 2 * (k + 1)
    stages["add_x0"] = 1
    return stages


def gabp_cold(stencil: str, sweeps: int) -> int:
    """Per-unknown cost of ``sweeps`` sweeps recomputing the precision messages."""
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    k = _k(stencil)
    return sum(gabp_breakdown(stencil, False).values()) + 8 * k * (sweeps - 1)


def gabp_frozen(stencil: str, sweeps: int) -> int:
    """Per-unknown cost of ``sweeps`` sweeps with precomputed precision messages."""
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    k = _k(stencil)
    return sum(gabp_breakdown(stencil, True).values()) + 3 * k * (sweeps - 1)


def gauss_seidel(stencil: str, sweeps: int = 1) -> int:
    return (2 * _k(stencil) + 1) * sweeps


_LINE_GS = {"5pt": 14, "9pt": 21}
_LINE_GABP_FIRST = {1: 38, 2: 65}


def flop_table(stencil: str, smoother: str, sweeps: int) -> int:
    """Operation count per unknown (multiply by N for the total).

    ``gabp`` uses precomputed precision messages.  ``line-gabp`` is only
    defined for 5-point stencils: line regions leave the diagonal couplings
    of a 9-point stencil uncovered.
    """
    if smoother not in SMOOTHERS:
        raise ValueError(f"unknown smoother {smoother!r}; expected one of {SMOOTHERS}")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    _k(stencil)
    if smoother == "gabp":
        return gabp_frozen(stencil, sweeps)
    if smoother == "gs":
        return gauss_seidel(stencil, sweeps)
    if smoother == "xy-gs":
        return _LINE_GS[stencil] * sweeps
    if stencil == "9pt":
        raise ValueError("line-gabp is not applicable to 9-point stencils (uncovered edges)")
    return _LINE_GABP_FIRST.get(sweeps, 28 * sweeps + 9)


def stencil_class(A) -> str:
    """'9pt' if any row couples to more than 4 neighbours, else '5pt'."""
    A = as_matrix(A)
    rows = A.row_indices()
    off = rows != A.col_indices
    deg = np.bincount(rows[off], minlength=A.n)
    return "9pt" if deg.size and deg.max() > 4 else "5pt"


def measured_flops(A, smoother: str, sweeps: int, frozen: bool = True) -> float:
    """Count from the actual sparsity pattern, including boundary rows.

    Uses the same stage accounting as :func:`gabp_breakdown` with each row's
    own neighbour count.
    """
    A = as_matrix(A)
    rows = A.row_indices()
    off = rows != A.col_indices
    k = np.bincount(rows[off], minlength=A.n).astype(float)
    if smoother == "gs":
        return float(np.sum(2 * k + 1) * sweeps)
    if smoother != "gabp":
        raise ValueError("measured counts are available for 'gabp' and 'gs'")
    resid = 2 * (k + 1) + 1
    if frozen:
        first = k / 2 + k + 1 + resid
        later = 3 * k
    else:
        first = 3 * k / 2 + 5 * k / 2 + 1 + resid
        later = 8 * k
    return float(np.sum(first + later * (sweeps - 1)))
