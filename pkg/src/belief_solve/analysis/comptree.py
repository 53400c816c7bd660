"""Computation trees: the unrolled message dependencies of synchronous GaBP.

The depth-``n`` tree rooted at variable ``i`` holds a copy of every node whose
information reaches ``i`` within ``n`` synchronous exchanges.  A copy of
``k`` whose parent is a copy of ``m`` has one child per in-neighbour of
``k`` other than ``m``.  Eliminating the tree system from the leaves up
gives exactly the root estimate of ``n`` flood sweeps started from zero
messages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..sparse import as_matrix

DEFAULT_NODE_CAP = 100_000


class TreeTooLarge(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ComputationTree:
    """Breadth-first list of copies.

    Attributes
    ----------
    root : int
        Original variable at the root.
    depth : int
    labels : ndarray
        Original variable of each copy (copy 0 is the root).
    parent : ndarray
        Parent copy index, -1 for the root.
    """

    root: int
    depth: int
    labels: np.ndarray
    parent: np.ndarray

    @property
    def size(self) -> int:
        return int(self.labels.size)

    @property
    def edges(self) -> list:
        return [(int(p), c) for c, p in enumerate(self.parent) if p >= 0]

    def incidence(self) -> sp.csr_matrix:
        """Copy-to-original map ``O`` with a single 1 per row."""
        n = int(self.labels.max()) + 1
        return sp.csr_matrix((np.ones(self.size), (np.arange(self.size), self.labels)),
                             shape=(self.size, n))


def build_computation_tree(A, root: int, depth: int, node_cap: int = DEFAULT_NODE_CAP) -> ComputationTree:
    A = as_matrix(A)
    if not 0 <= root < A.n:
        raise IndexError("root out of range")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    S = A.to_scipy()
    inn = [[int(c) for c in S.indices[S.indptr[i]:S.indptr[i + 1]] if c != i] for i in range(A.n)]
    labels, parent = [root], [-1]
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for copy in frontier:
            k = labels[copy]
            m = labels[parent[copy]] if parent[copy] >= 0 else -1
            for j in inn[k]:
                if j == m:
                    continue
                labels.append(j)
                parent.append(copy)
                nxt.append(len(labels) - 1)
                if len(labels) > node_cap:
                    raise TreeTooLarge(f"computation tree exceeds {node_cap} nodes")
        frontier = nxt
    return ComputationTree(root, depth, np.array(labels, dtype=np.int64), np.array(parent, dtype=np.int64))


def tree_system(A, b, tree: ComputationTree):
    """Sparse tree matrix ``B`` and right-hand side ``d = O b``."""
    A = as_matrix(A)
    S = A.to_scipy().tocsr()
    lab = tree.labels
    rows, cols, vals = list(range(tree.size)), list(range(tree.size)), list(S.diagonal()[lab])
    for c, p in tree.edges:
        rows += [p, c]
        cols += [c, p]
        vals += [S[lab[p], lab[c]], S[lab[c], lab[p]]]
    B = sp.csr_matrix((vals, (rows, cols)), shape=(tree.size, tree.size))
    return B, np.asarray(b, dtype=np.float64)[lab]


def computation_tree_solve(A, b, root: int, depth: int, node_cap: int = DEFAULT_NODE_CAP) -> float:
    """Root value after eliminating every other copy of the depth-``depth`` tree."""
    A = as_matrix(A)
    tree = build_computation_tree(A, root, depth, node_cap)
    S = A.to_scipy().tocsr()
    lab = tree.labels
    diag = S.diagonal()[lab].astype(float)
    d = np.asarray(b, dtype=np.float64)[lab].copy()
    for c in range(tree.size - 1, 0, -1):
        p = tree.parent[c]
        a_pc = S[lab[p], lab[c]]
        a_cp = S[lab[c], lab[p]]
        diag[p] -= a_pc * a_cp / diag[c]
        d[p] -= a_pc * d[c] / diag[c]
    return float(d[0] / diag[0])
