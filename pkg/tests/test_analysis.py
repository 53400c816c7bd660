import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from belief_solve.analysis.comptree import (
    TreeTooLarge,
    build_computation_tree,
    computation_tree_solve,
    tree_system,
)
from belief_solve.analysis.conditions import scalar_condition
from belief_solve.analysis.flops import (
    flop_table,
    gabp_breakdown,
    gabp_cold,
    gabp_frozen,
    gauss_seidel,
    measured_flops,
    stencil_class,
)
from belief_solve.analysis.lfa import anisotropic_stencil, laplacian_stencil, lfa_smoothing_factor
from belief_solve.gabp import gabp_solve
from belief_solve.ordering import Schedule
from belief_solve.problems import assemble
from belief_solve.sparse import SparseMatrix

from conftest import poisson_matrix, random_dd

# per-unknown operation counts for 1, 2 and 3 sweeps
TABLE = {
    ("5pt", "gabp"): (18, 30, 42),
    ("9pt", "gabp"): (32, 56, 80),
    ("5pt", "line-gabp"): (38, 65, 93),
    ("5pt", "gs"): (9, 18, 27),
    ("9pt", "gs"): (17, 34, 51),
    ("5pt", "xy-gs"): (14, 28, 42),
    ("9pt", "xy-gs"): (21, 42, 63),
}


@pytest.mark.parametrize("key", sorted(TABLE))
def test_flop_table(key):
    stencil, smoother = key
    for M, want in enumerate(TABLE[key], start=1):
        assert flop_table(stencil, smoother, M) == want


@pytest.mark.parametrize("M", [3, 4, 7, 20])
def test_flop_table_general_sweeps(M):
    assert flop_table("5pt", "gabp", M) == 12 * M + 6
    assert flop_table("9pt", "gabp", M) == 24 * M + 8
    assert flop_table("5pt", "line-gabp", M) == 28 * M + 9
    assert flop_table("9pt", "gs", M) == 17 * M
    assert flop_table("5pt", "xy-gs", M) == 14 * M


def test_flop_table_rejects_invalid():
    with pytest.raises(ValueError):
        flop_table("9pt", "line-gabp", 1)
    with pytest.raises(ValueError):
        flop_table("7pt", "gs", 1)
    with pytest.raises(ValueError):
        flop_table("5pt", "sor", 1)
    with pytest.raises(ValueError):
        flop_table("5pt", "gs", 0)


def test_single_sweep_expansion_nine_point():
    # accumulate 4+8, update 8+12, terminate 1, residual 18, add x0 1
    stages = gabp_breakdown("9pt", frozen=False)
    assert stages == {"accumulate": 12, "update": 20, "terminate": 1, "residual": 18, "add_x0": 1}
    assert sum(stages.values()) == 52
    assert gauss_seidel("9pt") == 17
    assert gabp_cold("9pt", 1) == 52


@pytest.mark.parametrize("M", range(1, 8))
def test_cold_and_frozen_closed_forms(M):
    assert gabp_cold("9pt", M) == 64 * M - 12
    assert gabp_frozen("9pt", M) == 24 * M + 8


def test_stencil_class():
    assert stencil_class(assemble("poisson", 3).A) == "5pt"
    assert stencil_class(assemble("mixed", 3, {"eps": 0.01}).A) == "9pt"


def test_measured_approaches_analytic_on_fine_grids():
    A = assemble("mixed", 6, {"eps": 0.01}).A
    per = measured_flops(A, "gabp", 3) / A.n
    assert per < flop_table("9pt", "gabp", 3)
    assert per == pytest.approx(flop_table("9pt", "gabp", 3), rel=0.1)
    assert measured_flops(A, "gs", 2) / A.n == pytest.approx(34, rel=0.1)


def test_scalar_condition_example(example7):
    rep = scalar_condition(example7)
    assert rep.rho_abs_R == pytest.approx(1.0312, abs=5e-4)
    assert not rep.sufficient and not rep.is_m_matrix


def test_scalar_condition_m_matrix():
    rep = scalar_condition(poisson_matrix(7))
    assert rep.is_m_matrix and rep.sufficient
    np.testing.assert_allclose(rep.rho_abs_R, np.cos(np.pi / 8), rtol=1e-8)


def test_scalar_condition_zero_diagonal():
    rep = scalar_condition(np.array([[0.0, 1.0], [1.0, 2.0]]))
    assert rep.diagonal_zeros == [0] and not rep.sufficient


def test_lfa_sequential_gabp_laplacian():
    res = lfa_smoothing_factor(laplacian_stencil(), "sequential-gabp")
    assert res.smoothing_factor == pytest.approx(0.5, abs=1e-6)
    np.testing.assert_allclose(res.maximizing_frequency, (2 * np.arctan(1 / 3), np.pi / 2), atol=1e-3)
    assert res.sampled_max <= res.smoothing_factor + 1e-12


def test_lfa_parallel_one_sweep_does_not_smooth():
    assert lfa_smoothing_factor(laplacian_stencil(), "parallel-gabp-1").smoothing_factor >= 1


def test_lfa_gauss_seidel_laplacian():
    assert lfa_smoothing_factor(laplacian_stencil(), "sequential-gs").smoothing_factor == \
        pytest.approx(0.5, abs=1e-3)


def test_lfa_anisotropy_degrades_point_smoothing():
    mild = lfa_smoothing_factor(anisotropic_stencil(0.5), "sequential-gabp").smoothing_factor
    strong = lfa_smoothing_factor(anisotropic_stencil(1e-3), "sequential-gabp").smoothing_factor
    assert strong > mild
    assert strong > 0.95


def test_lfa_input_validation():
    with pytest.raises(ValueError):
        lfa_smoothing_factor(laplacian_stencil(), "jacobi")
    with pytest.raises(ValueError):
        lfa_smoothing_factor(laplacian_stencil(), "sequential-gabp", grid_samples=16)


def _loopy(rng, n):
    D = random_dd(rng, n, 0.6, symmetric=False)
    # a cycle through every node guarantees loops
    for i in range(n):
        j = (i + 1) % n
        if D[i, j] == 0:
            D[i, j] = D[j, i] = 0.3
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, np.abs(D).sum(axis=1) + 0.5)
    return D


@settings(max_examples=10, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**31 - 1))
def test_tree_root_equals_flood_iterate(n, seed):
    r = np.random.default_rng(seed)
    D = _loopy(r, n)
    A = SparseMatrix.from_dense(D)
    b = r.normal(size=n)
    for depth in range(1, 6):
        x = gabp_solve(A, b, Schedule.flood(), tol=1e-300, max_iter=depth).solution
        roots = [computation_tree_solve(A, b, i, depth) for i in range(n)]
        np.testing.assert_allclose(roots, x, rtol=1e-12, atol=1e-12)


def test_tree_structure_on_triangle():
    D = np.array([[3.0, 1, 1], [1, 3, 1], [1, 1, 3]])
    tree = build_computation_tree(D, 0, 2)
    # root, two children, each with one grandchild
    assert tree.size == 5
    np.testing.assert_array_equal(tree.labels, [0, 1, 2, 2, 1])
    B, d = tree_system(D, np.ones(3), tree)
    assert B.shape == (5, 5)
    assert tree.incidence().sum() == 5


def test_tree_cap():
    with pytest.raises(TreeTooLarge):
        build_computation_tree(np.ones((6, 6)) + 6 * np.eye(6), 0, 12, node_cap=1000)
