"""Single benchmark runs: problem assembly, solver dispatch and CSV output."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classic import BREAKDOWN, KINDS as CLASSIC_KINDS
from .classic import bicgstab, relax_solve
from .gabp import error_correction_solve, gabp_solve
from .multigrid import SMOOTHER_NAMES, CycleSpec, build_hierarchy, mg_solve
from .ordering import Schedule
from .analysis.flops import flop_table, gabp_cold, gabp_frozen, gauss_seidel
from .problems import DEFAULT_PARAMS, assemble, problem_def
from .region import build_two_layer_region_graph, generalized_solve, line_regions
from .report import CONVERGED, DIVERGED, MAX_ITER, SolveReport

SOLVERS = ("gabp", "ec-gabp", "generalized-gabp", "bicgstab", "mg") + CLASSIC_KINDS

EXIT_CODES = {CONVERGED: 0, DIVERGED: 2, BREAKDOWN: 2, MAX_ITER: 3}


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce one run.

    ``params`` falls back to the problem's default parameters.  ``schedule``
    applies to ``gabp`` and ``ec-gabp``; ``sweeps`` to ``ec-gabp``;
    ``cycle``, ``pre``, ``post`` and ``smoother`` to ``mg``.
    """

    problem: str
    J: int = 6
    solver: str = "gabp"
    params: Optional[dict] = None
    schedule: str = "sequential-lexicographic"
    tol: float = 2e-4
    max_iter: int = 10_000
    cycle: Optional[tuple] = None
    pre: int = 1
    post: int = 1
    smoother: str = "gabp"
    sweeps: int = 3
    seed: int = 0
    persist: str = "call"

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.J < 2:
            raise ValueError("J must be at least 2")
        if self.solver == "mg":
            if self.smoother not in SMOOTHER_NAMES:
                raise ValueError(f"unknown smoother {self.smoother!r}")
            J1, levels = self.cycle_levels
            if J1 != self.J:
                raise ValueError(f"cycle fine level {J1} does not match J={self.J}")
            CycleSpec(J1, levels, self.pre, self.post, self.smoother, persist=self.persist)

    @property
    def cycle_levels(self) -> tuple:
        return tuple(self.cycle) if self.cycle is not None else (self.J, self.J)

    @property
    def resolved_params(self) -> dict:
        return dict(DEFAULT_PARAMS.get(self.problem, {}) if self.params is None else self.params)


def run_spec(spec: RunSpec) -> SolveReport:
    """Assemble the problem and run the requested solver."""
    if spec.solver == "mg":
        J1, levels = spec.cycle_levels
        cs = CycleSpec(J1, levels, spec.pre, spec.post, spec.smoother, persist=spec.persist)
        h = build_hierarchy(spec.problem, cs, spec.resolved_params)
        return mg_solve(h, tol=spec.tol, max_cycles=spec.max_iter)
    P = assemble(spec.problem, spec.J, spec.resolved_params)
    n = P.n_axis
    if spec.solver in ("gabp", "ec-gabp"):
        sched = Schedule.for_grid(spec.schedule, n) if spec.schedule != "parallel-flood" else Schedule.flood()
        if spec.solver == "gabp":
            return gabp_solve(P.A, P.b, sched, tol=spec.tol, max_iter=spec.max_iter)
        return error_correction_solve(P.A, P.b, spec.sweeps, sched, tol=spec.tol, max_iter=spec.max_iter)
    if spec.solver == "generalized-gabp":
        rg = build_two_layer_region_graph(P.A, line_regions(n))
        return generalized_solve(P.A, P.b, rg, tol=spec.tol, max_iter=spec.max_iter)
    if spec.solver == "bicgstab":
        return bicgstab(P.A, P.b, tol=spec.tol, max_iter=spec.max_iter)
    return relax_solve(spec.solver, P.A, P.b, tol=spec.tol, max_iter=spec.max_iter, nx=n, ny=n)


def flops_per_unknown(spec: RunSpec, report: SolveReport) -> float:
    """Measured FLOP score divided by the number of fine-grid unknowns.

    Multigrid reports are already per unknown.
    """
    if spec.solver == "mg":
        return report.info.get("flops_measured", report.flop_estimate)
    return report.flop_estimate / (2 ** spec.J - 1) ** 2


def analytic_flops_per_unknown(spec: RunSpec, report: SolveReport) -> Optional[float]:
    """Stencil-formula FLOP score per unknown, or None when no formula applies.

    The stencil class is taken from the assembled operator.
    """
    it = report.iterations
    if spec.solver == "mg":
        return report.info.get("flops_analytic")
    if it == 0 or spec.solver in ("bicgstab", "generalized-gabp") or spec.solver in ("x-line", "y-line"):
        return None
    st = "9pt" if problem_def(spec.problem, spec.resolved_params).c is not None else "5pt"
    if spec.solver == "gabp":
        return float(gabp_cold(st, it))
    if spec.solver == "ec-gabp":
        return float(gabp_frozen(st, spec.sweeps) * it)
    if spec.solver in ("zebra", "zebra-y"):
        return float(flop_table(st, "xy-gs", 1) * it)
    if spec.solver == "alt-zebra":
        return float(2 * flop_table(st, "xy-gs", 1) * it)
    return float(gauss_seidel(st, it))


def history_csv(report: SolveReport) -> str:
    """Residual history as CSV with a header and 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "residual_inf"])
    for i, r in enumerate(report.residual_history):
        w.writerow([i, f"{r:.17g}"])
    return buf.getvalue()


def summary_line(spec: RunSpec, report: SolveReport) -> str:
    return (f"problem={spec.problem} J={spec.J} solver={spec.solver} status={report.status} "
            f"iterations={report.iterations} residual={report.final_residual:.6e} "
            f"flops_per_N={flops_per_unknown(spec, report):.6g} "
            f"analytic_flops_per_N={_g(analytic_flops_per_unknown(spec, report))}")


def _g(v) -> str:
    return "n/a" if v is None else f"{v:.6g}"


def exit_code(report: SolveReport) -> int:
    return EXIT_CODES.get(report.status, 1)
