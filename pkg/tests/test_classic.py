import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from belief_solve.classic import (
    KINDS,
    Relaxer,
    SmootherConfig,
    bicgstab,
    relax,
    relax_solve,
)
from belief_solve.problems import assemble
from belief_solve.sparse import SparseMatrix

from conftest import random_dd


def test_gauss_seidel_hand_values():
    A = np.array([[4.0, -1.0], [-2.0, 5.0]])
    x = relax("gs", A, np.array([3.0, 1.0]), np.zeros(2))
    np.testing.assert_allclose(x, [0.75, 0.5])


def test_jacobi_hand_values():
    A = np.array([[4.0, -1.0], [-2.0, 5.0]])
    x = relax("jacobi", A, np.array([3.0, 1.0]), np.zeros(2))
    np.testing.assert_allclose(x, [0.75, 0.2])


@pytest.mark.parametrize("kind", KINDS)
def test_fixed_point_is_solution(kind):
    P = assemble("general", 3)
    x = np.linalg.solve(P.A.to_dense(), P.b)
    np.testing.assert_allclose(relax(kind, P.A, P.b, x, 2, nx=P.n_axis, ny=P.n_axis), x, atol=1e-10)


def test_x_line_solves_decoupled_rows_exactly():
    # anisotropic with no y coupling: each x-line is an independent tridiagonal system
    P = assemble("anisotropic", 3, {"eps": 0.1})
    S = P.A.to_scipy().tolil()
    n = P.n_axis
    for i in range(n * n):
        for j in (i - n, i + n):
            if 0 <= j < n * n:
                S[i, j] = 0.0
    A = SparseMatrix.from_scipy(S.tocsr())
    x = relax("x-line", A, P.b, np.zeros(n * n), 1, nx=n, ny=n)
    np.testing.assert_allclose(A.to_dense() @ x, P.b, atol=1e-10)


def test_zebra_equals_two_half_sweeps():
    P = assemble("poisson", 3)
    n = P.n_axis
    x0 = np.random.default_rng(1).normal(size=n * n)
    z = relax("zebra", P.A, P.b, x0, 1, nx=n, ny=n)
    # red lines (even y) first, then black lines, each line solved exactly
    D = P.A.to_dense()
    x = x0.copy()
    for parity in (0, 1):
        for j in range(parity, n, 2):
            idx = np.arange(j * n, (j + 1) * n)
            rest = np.setdiff1d(np.arange(n * n), idx)
            x[idx] = np.linalg.solve(D[np.ix_(idx, idx)], P.b[idx] - D[np.ix_(idx, rest)] @ x[rest])
    np.testing.assert_allclose(z, x, atol=1e-12)


def test_alt_zebra_costs_two_sweeps():
    P = assemble("poisson", 3)
    n = P.n_axis
    one = Relaxer(P.A, SmootherConfig("zebra", n, n)).flops_per_sweep()
    assert Relaxer(P.A, SmootherConfig("alt-zebra", n, n)).flops_per_sweep() == 2 * one


def test_config_validation():
    with pytest.raises(ValueError):
        SmootherConfig("sor")
    with pytest.raises(ValueError):
        SmootherConfig("zebra")
    with pytest.raises(ValueError):
        Relaxer(np.eye(4), SmootherConfig("rb-gs", 3, 3))
    with pytest.raises(ZeroDivisionError):
        Relaxer(np.array([[0.0, 1.0], [1.0, 1.0]]), SmootherConfig("gs"))


def test_relax_solve_counts():
    P = assemble("poisson", 3)
    rep = relax_solve("gs", P.A, P.b, tol=1e-6, max_iter=2000)
    assert rep.converged
    assert len(rep.residual_history) == rep.iterations + 1
    assert rep.flop_estimate == (2 * P.A.nnz + P.A.n) * rep.iterations


def test_red_black_gs_faster_than_jacobi():
    P = assemble("poisson", 4)
    n = P.n_axis
    gs = relax_solve("rb-gs", P.A, P.b, nx=n, ny=n)
    jac = relax_solve("jacobi", P.A, P.b)
    assert gs.converged and jac.converged
    assert gs.iterations < jac.iterations


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2**31 - 1))
def test_bicgstab_solves_dd(n, seed):
    r = np.random.default_rng(seed)
    D = random_dd(r, n, 0.3)
    b = r.normal(size=n)
    rep = bicgstab(D, b, tol=1e-10, max_iter=500)
    assert rep.converged
    assert np.max(np.abs(D @ rep.solution - b)) <= 1e-10


def test_bicgstab_zero_rhs():
    rep = bicgstab(np.eye(3), np.zeros(3))
    assert rep.converged and rep.iterations == 0


def test_bicgstab_breakdown():
    # rotation: rhat . A rhat = 0 on the first step
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    rep = bicgstab(A, np.array([1.0, 0.0]), tol=1e-12, max_iter=10)
    assert rep.status == "breakdown"
    assert rep.info["reason"] == "rhat.v"
