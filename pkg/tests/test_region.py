import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from belief_solve.gabp import MessageState, build_message_graph, gabp_sweep
from belief_solve.ordering import Schedule
from belief_solve.problems import assemble
from belief_solve.region import (
    BlockMessageState,
    BlockPartition,
    GeneralizedEngine,
    RegionGraph,
    RegionGraphError,
    bethe_regions,
    block_lu,
    build_two_layer_region_graph,
    check_block_convergence,
    flop_count_region,
    generalized_solve,
    line_regions,
    load_regions,
    naive_message_update,
    save_regions,
    schur_correction,
    validate_counting,
)
from belief_solve.sparse import SparseMatrix

from conftest import EXAMPLE_7, EXAMPLE_7_BLOCKS, random_dd


def three_block_instance(rng, sizes=(3, 2, 3), density=0.5):
    """Random system split into three blocks; large regions are the pairwise unions."""
    n = sum(sizes)
    D = random_dd(rng, n, density, symmetric=False)
    # a ring of couplings keeps every union of two blocks connected
    ring = [(i, (i + 1) % n) for i in range(n)]
    for i, j in ring:
        for a, c in ((i, j), (j, i)):
            if D[a, c] == 0:
                D[a, c] = rng.uniform(0.1, 1.0)
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, np.abs(D).sum(axis=1) + rng.uniform(0.5, 2.0, n))
    cuts = np.cumsum((0,) + tuple(sizes))
    blocks = [list(range(cuts[i], cuts[i + 1])) for i in range(3)]
    large = [blocks[0] + blocks[1], blocks[0] + blocks[2], blocks[1] + blocks[2]]
    return D, blocks, large


def test_example_regions(example7):
    B1, B2, B3 = (list(b) for b in EXAMPLE_7_BLOCKS)
    rg = build_two_layer_region_graph(example7, [B1 + B2, B1 + B3, B2 + B3])
    assert rg.is_two_layer
    assert [rg.regions[s] for s in rg.small] == [(0, 1, 2), (3, 4), (5, 6)]
    assert [rg.counting[s] for s in rg.small] == [-1, -1, -1]
    assert validate_counting(rg).valid


def test_hasse_default_and_shadow():
    rg = RegionGraph.from_regions(4, [(0, 1, 2), (1, 2, 3), (1, 2), (2,)], [(0, 1), (1, 2), (2, 3)])
    assert rg.parents[2] == (0, 1)
    assert rg.parents[3] == (2,)
    assert rg.counting == (1, 1, -1, 0)
    assert not rg.is_two_layer
    assert rg.shadow(0) == {0, 2, 3}
    assert rg.blanket(2) == {0, 1}
    assert rg.blanket(3) == {2}


def test_explicit_edges_must_be_subsets():
    with pytest.raises(RegionGraphError):
        RegionGraph.from_regions(3, [(0, 1), (2,)], [], edges=[(0, 1)])


def test_uncovered_edge_rejected():
    A = SparseMatrix.from_dense(np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]]))
    with pytest.raises(RegionGraphError, match="covered"):
        build_two_layer_region_graph(A, [[0, 1], [1, 2]])
    with pytest.raises(RegionGraphError, match="vertices"):
        build_two_layer_region_graph(A, [[0, 1]])


def test_disconnected_region_rejected():
    A = SparseMatrix.from_dense(np.array([[2.0, 1, 0], [1, 2, 1], [0, 1, 2]]))
    with pytest.raises(RegionGraphError, match="connected"):
        build_two_layer_region_graph(A, [[0, 1], [1, 2], [0, 2]])


def test_line_regions_counting():
    P = assemble("poisson", 3)
    rg = build_two_layer_region_graph(P.A, line_regions(P.n_axis))
    assert len(rg.large) == 2 * P.n_axis
    assert len(rg.small) == P.A.n
    assert validate_counting(rg).valid


def test_regions_round_trip(tmp_path, example7):
    large = [[0, 1, 2, 3, 4], [0, 1, 2, 5, 6], [3, 4, 5, 6]]
    save_regions(tmp_path / "r.txt", large)
    rg = load_regions(tmp_path / "r.txt", example7)
    assert rg.regions == build_two_layer_region_graph(example7, large).regions


def test_example_generalized_converges(example7):
    B1, B2, B3 = (list(b) for b in EXAMPLE_7_BLOCKS)
    rg = build_two_layer_region_graph(example7, [B1 + B2, B1 + B3, B2 + B3])
    b = np.arange(1.0, 8.0)
    rep = generalized_solve(example7, b, rg, tol=1e-12, max_iter=200)
    assert rep.converged
    np.testing.assert_allclose(rep.solution, np.linalg.solve(EXAMPLE_7, b), atol=1e-10)


def test_block_condition_example(example7):
    part = BlockPartition(EXAMPLE_7_BLOCKS)
    assert check_block_convergence(example7, part, "inf").rho == pytest.approx(0.99300, abs=1e-4)
    assert check_block_convergence(example7, part, "spectral").rho == pytest.approx(0.95857, abs=1e-4)
    scalar = check_block_convergence(example7, BlockPartition.scalar(7), "inf")
    assert scalar.rho == pytest.approx(1.03122, abs=1e-4)


def test_block_partition_validation():
    with pytest.raises(ValueError):
        BlockPartition(((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        BlockPartition(((0,), (2,)))


@pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
def test_singular_block_reported():
    D = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 3.0]])
    rep = check_block_convergence(D, BlockPartition(((0, 1), (2,))))
    assert rep.singular_block == 0 and not rep.sufficient


def test_block_lu_reconstructs(rng):
    D = random_dd(rng, 6, 0.6)
    Lf, Uf = block_lu(D, [0, 1, 2], [3, 4, 5])
    np.testing.assert_allclose(Lf @ Uf, D, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_first_message_is_schur_complement(seed):
    r = np.random.default_rng(seed)
    D, blocks, large = three_block_instance(r)
    A = SparseMatrix.from_dense(D)
    b = r.normal(size=A.n)
    rg = build_two_layer_region_graph(A, large)
    eng = GeneralizedEngine(A, rg)
    zero = BlockMessageState.zeros(rg)
    out = zero.copy()
    for k in range(len(eng.plan.large)):
        eng.region_update(k, zero, b, out)
    for e, (k, c) in enumerate(eng.plan.edges):
        kv = list(eng.plan.child_vars[c])
        jbar = sorted(set(eng.plan.large[k]) - set(kv))
        lam, m = schur_correction(A, b, jbar, kv)
        np.testing.assert_allclose(out.Lambda[e], lam, atol=1e-10)
        np.testing.assert_allclose(out.m[e], m, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_woodbury_matches_naive(seed, k):
    r = np.random.default_rng(seed)
    # the explicit covariance path inverts [[0, A_lj], [A_jl, *]], so it needs
    # equal block sizes and full coupling blocks
    D, blocks, large = three_block_instance(r, sizes=(k, k, k), density=1.0)
    A = SparseMatrix.from_dense(D)
    b = r.normal(size=A.n)
    rg = build_two_layer_region_graph(A, large)
    eng = GeneralizedEngine(A, rg)
    state = BlockMessageState.zeros(rg)
    for _ in range(int(r.integers(0, 3))):
        state, _ = eng.sweep(b, state)
    out = state.copy()
    for k in range(len(eng.plan.large)):
        eng.region_update(k, state, b, out)
    for e in range(len(eng.plan.edges)):
        lam, m = naive_message_update(A, b, rg, state, e)
        np.testing.assert_allclose(out.Lambda[e], lam, atol=1e-10)
        np.testing.assert_allclose(out.m[e], m, atol=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_bethe_regions_reproduce_scalar_flood(seed):
    r = np.random.default_rng(seed)
    D = random_dd(r, 12, 0.3, symmetric=bool(seed % 2))
    A = SparseMatrix.from_dense(D)
    b = r.normal(size=12)
    rg = build_two_layer_region_graph(A, bethe_regions(A))
    eng = GeneralizedEngine(A, rg)
    child = [rg.regions[s][0] for s in rg.small]
    st_g = BlockMessageState.zeros(rg)
    st_s = MessageState.zeros(build_message_graph(A))
    for _ in range(6):
        st_g, _ = eng.sweep(b, st_g, flood=True)
        st_s, x = gabp_sweep(A, b, st_s, Schedule.flood())
        beliefs = np.array([v[0] for v in eng.small_region_beliefs(b, st_g)])
        np.testing.assert_allclose(beliefs, x[child], atol=1e-12)


def test_tridiagonal_path_matches_dense():
    P = assemble("anisotropic", 3, {"eps": 0.01})
    rg = build_two_layer_region_graph(P.A, line_regions(P.n_axis))
    fast = GeneralizedEngine(P.A, rg)
    slow = GeneralizedEngine(P.A, rg)
    slow._bands = [None] * len(slow._bands)
    lam = np.zeros(len(fast.plan.edges))
    mm = np.zeros_like(lam)
    la, ma, lb, mb = lam, mm, lam, mm
    for _ in range(3):
        la, ma, xa = fast.sweep_flat(P.b, la, ma)
        lb, mb, xb = slow.sweep_flat(P.b, lb, mb)
    np.testing.assert_allclose(xa, xb, atol=1e-12)
    np.testing.assert_allclose(la, lb, atol=1e-12)


def test_singleton_path_matches_block_path(example7):
    rg = build_two_layer_region_graph(example7, bethe_regions(example7))
    b = np.ones(7)
    eng = GeneralizedEngine(example7, rg)
    state = BlockMessageState.zeros(rg)
    fast, xf = eng.sweep(b, state)
    out = state.copy()
    x = np.zeros(7)
    for k in range(len(eng.plan.large)):
        x[eng.plan.large[k]] = eng.region_update(k, out, b, out)
    np.testing.assert_allclose(xf, x, atol=1e-13)
    for a, c in zip(fast.Lambda, out.Lambda):
        np.testing.assert_allclose(a, c, atol=1e-13)


def test_flop_count_naive_is_larger(example7):
    B1, B2, B3 = (list(b) for b in EXAMPLE_7_BLOCKS)
    rg = build_two_layer_region_graph(example7, [B1 + B2, B1 + B3, B2 + B3])
    fast = flop_count_region(rg)
    assert fast["total"] == pytest.approx(sum(fast["per_region"]))
    assert flop_count_region(rg, "naive")["total"] > fast["total"]
