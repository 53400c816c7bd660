"""Benchmark tables: every cell run next to its reference iteration count."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .bench import RunSpec, analytic_flops_per_unknown, flops_per_unknown, run_spec
from .report import CONVERGED, DIVERGED

DIVERGE = "diverge"


@dataclass(frozen=True)
class Column:
    label: str
    params: dict


@dataclass(frozen=True)
class Row:
    """One solver configuration.

    ``reference`` holds the reference iteration count (or ``"diverge"``)
    per column; ``reference_flops`` the reference FLOP-per-unknown score
    where one exists.
    """

    label: str
    spec: RunSpec
    reference: tuple
    reference_flops: tuple = ()


@dataclass(frozen=True)
class Suite:
    name: str
    problem: str
    columns: tuple
    rows: tuple


@dataclass
class RowResult:
    suite: str
    row: str
    column: str
    status: str
    iterations: Optional[int]
    flops_per_n: Optional[float]
    analytic_flops_per_n: Optional[float]
    reference: object
    reference_flops: Optional[float]
    outcome_matches: Optional[bool]
    history: list = field(default_factory=list)
    error: str = ""


def _mg(problem, pre, post, smoother, J1=6, levels=6):
    return RunSpec(problem, J=J1, solver="mg", cycle=(J1, levels), pre=pre, post=post,
                   smoother=smoother, max_iter=500)


def _stretched(eps):
    return {"p": 20, "eta": 0.5, "eps": eps}


def _build() -> dict:
    gen = "general"
    standalone = Suite("standalone", gen, (Column("", {}),), (
        Row("sequential GaBP", RunSpec(gen, solver="gabp"), (1548,), (99_000,)),
        Row("parallel GaBP", RunSpec(gen, solver="gabp", schedule="parallel-flood"), (3299,), (211_000,)),
        Row("GS", RunSpec(gen, solver="gs"), (3102,), (53_000,)),
        Row("4-color GS", RunSpec(gen, solver="4c-gs"), (2620,), (45_000,)),
        Row("4-color GaBP", RunSpec(gen, solver="gabp", schedule="four-color"), (1865,), (119_000,)),
        Row("Jacobi", RunSpec(gen, solver="jacobi"), (4746,), (81_000,)),
        Row("error correction 4-colors GaBP (3)",
            RunSpec(gen, solver="ec-gabp", schedule="four-color", sweeps=3), (706,), (56_000,)),
    ))
    mixed = Suite("mixed", "mixed", (Column("eps=0.01", {"eps": 0.01}), Column("eps=-0.01", {"eps": -0.01})), (
        Row("4-color GaBP (0,4)", _mg("mixed", 0, 4, "4c-gabp"), (23, 28), (2392, 2917)),
        Row("4-color GS (1,1)", _mg("mixed", 1, 1, "4c-gs"), (70, 84)),
        Row("zebra (0,1)", _mg("mixed", 0, 1, "zebra"), (104, 127)),
        Row("alternating zebra (0,1)", _mg("mixed", 0, 1, "alt-zebra"), (64, 78)),
    ))
    bl = "boundary-layer"
    boundary = Suite("boundary-layer", bl, (Column("eps=0.02", {"eps": 0.02}), Column("eps=0.01", {"eps": 0.01})), (
        Row("red-black GaBP (5,0)", _mg(bl, 5, 0, "rb-gabp"), (5, 3), (330, 198)),
        Row("red-black GS (1,1)", _mg(bl, 1, 1, "rb-gs"), (DIVERGE, DIVERGE)),
        Row("zebra (2,2)", _mg(bl, 2, 2, "zebra"), (5, DIVERGE)),
        Row("alternating zebra (1,1)", _mg(bl, 1, 1, "alt-zebra"), (4, 3)),
        Row("line GaBP (0,2)", _mg(bl, 0, 2, "line-gabp"), (5, 5)),
    ))
    il = "inner-layer"
    inner = Suite("inner-layer", il, (Column("eps=0.015", {"eps": 0.015}), Column("eps=0.01", {"eps": 0.01})), (
        Row("red-black GaBP (3,0)", _mg(il, 3, 0, "rb-gabp"), (7, 13)),
        Row("red-black GS (1,1)", _mg(il, 1, 1, "rb-gs"), (DIVERGE, DIVERGE)),
        Row("zebra (2,0)", _mg(il, 2, 0, "zebra"), (9, DIVERGE)),
        Row("alternating zebra (1,1)", _mg(il, 1, 1, "alt-zebra"), (4, 5)),
        Row("line GaBP (0,2)", _mg(il, 0, 2, "line-gabp"), (8, 8)),
    ))
    st = "stretched"
    stretched = Suite("stretched", st, (Column("eps=1e-6", _stretched(1e-6)), Column("eps=8e-8", _stretched(8e-8))), (
        Row("red-black GaBP (3,0)", _mg(st, 3, 0, "rb-gabp"), (18, 23)),
        Row("red-black GS (3,0)", _mg(st, 3, 0, "rb-gs"), (68, 97)),
        Row("zebra (4,0)", _mg(st, 4, 0, "zebra"), (50, 72)),
        Row("alternating zebra (1,1)", _mg(st, 1, 1, "alt-zebra"), (10, 12)),
        Row("line GaBP (0,2)", _mg(st, 0, 2, "line-gabp"), (20, 23)),
    ))
    compare = Suite("bicgstab-compare", gen, (Column("", {}),), (
        Row("V(6,6), 4-color GaBP (1,1)", _mg(gen, 1, 1, "4c-gabp"), (21,), (3_000,)),
        Row("BiCGSTAB", RunSpec(gen, solver="bicgstab"), (255,), (38_000,)),
    ))
    an = "anisotropic"
    cols = tuple(Column(f"eps={e:g}", {"eps": e}) for e in (1e-1, 1e-2, 1e-3))
    fig2 = Suite("anisotropy-fig2", an, cols, (
        Row("GaBP (2,2)", _mg(an, 2, 2, "gabp", levels=4), (None, None, 15)),
        Row("GaBP (3,3)", _mg(an, 3, 3, "gabp", levels=4), (None, None, 10)),
        Row("GS (3,3)", _mg(an, 3, 3, "gs", levels=4), (None, None, 400)),
    ))
    return {s.name: s for s in (standalone, mixed, boundary, inner, stretched, compare, fig2)}


SUITES = _build()
SUITE_NAMES = tuple(SUITES)


def _outcome_matches(status: str, reference) -> Optional[bool]:
    if reference is None:
        return None
    if reference == DIVERGE:
        return status != CONVERGED
    return status == CONVERGED


def _run_cell(args) -> RowResult:
    suite, row, ci, col = args
    spec = replace(row.spec, params=dict(col.params))
    ref = row.reference[ci] if ci < len(row.reference) else None
    ref_f = row.reference_flops[ci] if ci < len(row.reference_flops) else None
    try:
        rep = run_spec(spec)
    except Exception as exc:  # a failed row is reported, not fatal
        return RowResult(suite, row.label, col.label, "error", None, None, None, ref, ref_f, None,
                         error=f"{type(exc).__name__}: {exc}")
    return RowResult(suite, row.label, col.label, rep.status, rep.iterations,
                     flops_per_unknown(spec, rep), analytic_flops_per_unknown(spec, rep), ref, ref_f, _outcome_matches(rep.status, ref),
                     list(rep.residual_history))


def _workers() -> int:
    raw = os.environ.get("BELIEF_SOLVE_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"BELIEF_SOLVE_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ValueError("BELIEF_SOLVE_THREADS must be a positive integer")
    return k


def run_suite(name: str, workers: Optional[int] = None) -> list:
    """Run every cell of suite ``name``; rows may run in parallel processes."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {SUITE_NAMES}")
    s = SUITES[name]
    cells = [(s.name, row, ci, col) for row in s.rows for ci, col in enumerate(s.columns)]
    workers = _workers() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _measured(r: RowResult) -> str:
    if r.status == "error":
        return "error"
    if r.status == DIVERGED:
        return DIVERGE
    if r.status != CONVERGED:
        return f">{r.iterations}"
    return str(r.iterations)


def to_markdown(results: list) -> str:
    """One line per cell: measured next to reference."""
    lines = ["| row | column | iterations | reference | FLOP/N analytic | FLOP/N measured "
             "| reference FLOP/N | outcome |",
             "|---|---|---|---|---|---|---|---|"]
    for r in results:
        ok = r.status == CONVERGED
        outcome = {True: "match", False: "MISMATCH", None: "-"}[r.outcome_matches]
        lines.append(f"| {r.row} | {r.column or '-'} | {_measured(r)} | {_fmt(r.reference)} | "
                     f"{_fmt(r.analytic_flops_per_n if ok else None)} | "
                     f"{_fmt(r.flops_per_n if ok else None)} | {_fmt(r.reference_flops)} | {outcome} |")
    return "\n".join(lines) + "\n"


def to_csv(results: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "row", "column", "status", "iterations", "flops_per_n_measured",
                "flops_per_n_analytic", "reference", "reference_flops", "outcome_matches", "error"])
    for r in results:
        w.writerow([r.suite, r.row, r.column, r.status, r.iterations,
                    "" if r.flops_per_n is None else f"{r.flops_per_n:.17g}",
                    "" if r.analytic_flops_per_n is None else f"{r.analytic_flops_per_n:.17g}",
                    "" if r.reference is None else r.reference,
                    "" if r.reference_flops is None else r.reference_flops,
                    "" if r.outcome_matches is None else r.outcome_matches, r.error])
    return buf.getvalue()


def histories_csv(results: list) -> str:
    """Long-format residual histories of every cell."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "row", "column", "iteration", "residual_inf"])
    for r in results:
        for i, v in enumerate(r.history):
            w.writerow([r.suite, r.row, r.column, i, f"{v:.17g}"])
    return buf.getvalue()
