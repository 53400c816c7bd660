"""Sufficient conditions for scalar message passing to converge."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sparse import as_matrix, spectral_radius


@dataclass(frozen=True)
class ScalarConditionReport:
    """Walk-summability style verdict for a matrix.

    Attributes
    ----------
    rho_abs_R : float
        Spectral radius of ``|R~|_ij = (1 - delta_ij) |A_ij| / |A_ii|``.
    is_m_matrix : bool
        Positive diagonal, nonpositive off-diagonal and ``rho(I - D^{-1} A) < 1``.
    sufficient : bool
        ``rho_abs_R < 1`` with no zero on the diagonal.
    diagonal_zeros : list of int
    rho_converged : bool
        Whether power iteration met its tolerance.
    """

    rho_abs_R: float
    is_m_matrix: bool
    sufficient: bool
    diagonal_zeros: list
    rho_converged: bool = True


def scalar_condition(A, tol: float = 1e-10, max_iter: int = 200_000) -> ScalarConditionReport:
    A = as_matrix(A)
    d = A.diagonal()
    zeros = [int(i) for i in np.nonzero(d == 0)[0]]
    if zeros:
        return ScalarConditionReport(float("inf"), False, False, zeros, True)
    est = spectral_radius(A.abs_offdiag_scaled(), tol=tol, max_iter=max_iter)
    rows = A.row_indices()
    off = rows != A.col_indices
    sign_ok = bool(np.all(d > 0) and np.all(A.values[off] <= 0))
    # with these signs I - D^{-1}A equals |R~| entrywise, so the radius is shared
    is_m = sign_ok and est.value < 1
    return ScalarConditionReport(est.value, is_m, est.value < 1, [], est.converged)
