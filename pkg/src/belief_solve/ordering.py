"""Node visiting orders and colorings shared by message passing and relaxation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sparse import SparseMatrix

FLOOD = "parallel-flood"
LEXICOGRAPHIC = "sequential-lexicographic"
RED_BLACK = "red-black"
FOUR_COLOR = "four-color"
CUSTOM = "custom-order"

KINDS = (FLOOD, LEXICOGRAPHIC, RED_BLACK, FOUR_COLOR, CUSTOM)

_ALIASES = {
    "flood": FLOOD, "parallel": FLOOD, FLOOD: FLOOD,
    "lex": LEXICOGRAPHIC, "lexicographic": LEXICOGRAPHIC, "sequential": LEXICOGRAPHIC,
    LEXICOGRAPHIC: LEXICOGRAPHIC,
    "rb": RED_BLACK, "red-black": RED_BLACK,
    "4c": FOUR_COLOR, "four-color": FOUR_COLOR, "4-color": FOUR_COLOR,
    "custom": CUSTOM, CUSTOM: CUSTOM,
}


def grid_colors(nx: int, ny: int, kind: str) -> np.ndarray:
    """Parity coloring of an ``nx`` by ``ny`` grid stored x-fastest.

    Red-black uses ``(i + j) mod 2`` and is proper for 5-point stencils;
    four-color uses the ``(i mod 2, j mod 2)`` classes and is proper for
    9-point stencils as well.
    """
    i = np.tile(np.arange(nx), ny)
    j = np.repeat(np.arange(ny), nx)
    kind = _ALIASES.get(kind, kind)
    if kind == RED_BLACK:
        return ((i + j) % 2).astype(np.int64)
    if kind == FOUR_COLOR:
        return ((i % 2) + 2 * (j % 2)).astype(np.int64)
    raise ValueError(f"no grid coloring for schedule kind {kind!r}")


def greedy_colors(A: SparseMatrix) -> np.ndarray:
    """Greedy coloring of the symmetrised graph of ``A`` in index order."""
    S = A.to_scipy()
    S = (abs(S) + abs(S.T)).tocsr()
    colors = np.full(A.n, -1, dtype=np.int64)
    for v in range(A.n):
        nb = S.indices[S.indptr[v]:S.indptr[v + 1]]
        used = {int(colors[u]) for u in nb if u != v and colors[u] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return colors


def is_proper(A: SparseMatrix, colors: np.ndarray) -> bool:
    rows = A.row_indices()
    off = rows != A.col_indices
    return bool(np.all(colors[rows[off]] != colors[A.col_indices[off]]))


@dataclass(frozen=True, eq=False)
class Schedule:
    """How nodes are visited during one sweep.

    ``kind`` is one of :data:`KINDS`.  Sequential kinds visit ``order``
    one node at a time with the freshest data; colored kinds derive that
    order by listing the colors one after another (index order inside a
    color).  ``parallel-flood`` updates everything from a snapshot.
    """

    kind: str = LEXICOGRAPHIC
    order: Optional[np.ndarray] = None
    colors: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == CUSTOM and self.order is None:
            raise ValueError("custom-order schedule needs an explicit order")
        if kind in (RED_BLACK, FOUR_COLOR) and self.colors is None and self.order is None:
            raise ValueError(f"{kind} schedule needs a coloring (see Schedule.for_grid)")

    # constructors -----------------------------------------------------------

    @classmethod
    def flood(cls) -> "Schedule":
        return cls(FLOOD)

    @classmethod
    def lexicographic(cls) -> "Schedule":
        return cls(LEXICOGRAPHIC)

    @classmethod
    def custom(cls, order) -> "Schedule":
        return cls(CUSTOM, order=np.asarray(order, dtype=np.int64))

    @classmethod
    def for_grid(cls, kind: str, nx: int, ny: Optional[int] = None) -> "Schedule":
        """Schedule for an ``nx`` by ``ny`` grid of unknowns (x fastest)."""
        kind = _ALIASES.get(kind, kind)
        ny = nx if ny is None else ny
        if kind in (RED_BLACK, FOUR_COLOR):
            return cls(kind, colors=grid_colors(nx, ny, kind))
        return cls(kind)

    @classmethod
    def greedy(cls, A: SparseMatrix) -> "Schedule":
        colors = greedy_colors(A)
        kind = RED_BLACK if colors.max(initial=0) <= 1 else FOUR_COLOR
        return cls(kind, colors=colors)

    # queries ----------------------------------------------------------------

    @property
    def sequential(self) -> bool:
        return self.kind != FLOOD

    def node_order(self, n: int) -> np.ndarray:
        if self.order is not None:
            order = np.asarray(self.order, dtype=np.int64)
            if order.size != n or not np.array_equal(np.sort(order), np.arange(n)):
                raise ValueError("schedule order must visit every node exactly once")
            return order
        if self.colors is not None:
            if len(self.colors) != n:
                raise ValueError("coloring size does not match the system")
            return np.argsort(self.colors, kind="stable").astype(np.int64)
        return np.arange(n, dtype=np.int64)

    def color_classes(self, n: int) -> list:
        """Node index arrays per color (a single class for uncolored kinds)."""
        if self.colors is None:
            return [self.node_order(n)]
        return [np.nonzero(self.colors == c)[0] for c in np.unique(self.colors)]
