"""Result container shared by every iterative solver in the package."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CONVERGED = "converged"
DIVERGED = "diverged"
MAX_ITER = "max_iter"

#: Residual growth (relative to the initial residual) treated as divergence.
DIVERGENCE_FACTOR = 1e12


@dataclass
class SolveReport:
    """Outcome of an iterative solve.

    Attributes
    ----------
    status : str
        One of ``"converged"``, ``"diverged"``, ``"max_iter"``.
    iterations : int
        Sweeps, cycles or Krylov steps performed.
    residual_history : list of float
        ``||b - A x||_inf`` before the first iteration and after each one,
        so its length is ``iterations + 1``.
    flop_estimate : float
        Floating point operations spent by the iteration (see each solver
        for what is counted).
    solution : ndarray
        Final iterate.
    info : dict
        Solver-specific extras (breakdown location, message deltas, ...).
    """

    status: str
    iterations: int
    residual_history: list
    flop_estimate: float
    solution: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def __repr__(self):
        return (f"SolveReport(status={self.status!r}, iterations={self.iterations}, "
                f"residual={self.final_residual:.3e})")


def diverging(res: float, res0: float) -> bool:
    return not np.isfinite(res) or res > DIVERGENCE_FACTOR * max(res0, np.finfo(float).tiny)
