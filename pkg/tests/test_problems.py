import numpy as np
import pytest
import sympy as sym
from hypothesis import given, settings, strategies as st
from scipy.sparse.linalg import spsolve

from belief_solve.problems import (
    DEFAULT_PARAMS,
    PROBLEM_NAMES,
    assemble,
    exact_solution,
    problem_def,
    stencil_weights,
)

X, Y = sym.symbols("x y")
PI = sym.pi

SYMBOLIC_EXACT = {
    "poisson": lambda p: sym.sin(PI * X) * sym.sin(PI * Y),
    "anisotropic": lambda p: sym.sin(PI * X) * sym.sin(PI * Y),
    "general": lambda p: sym.cos(PI * X) * sym.cos(PI * Y),
    "mixed": lambda p: 2 * X ** 3 * Y ** 4,
    "boundary-layer": lambda p: (2 * sym.exp(-1 / p["eps"]) - sym.exp((X - 1) / p["eps"])
                                 - sym.exp((Y - 1) / p["eps"])) / (sym.exp(-1 / p["eps"]) - 1),
    "inner-layer": lambda p: sym.exp(-(X + Y - 1) ** 2 / p["eps"]),
    "stretched": lambda p: sym.cos(2 * PI * (X + Y)) * sym.sin(2 * PI * (X - Y)),
}

CASES = [(name, DEFAULT_PARAMS[name]) for name in PROBLEM_NAMES] + [
    ("mixed", {"eps": -0.01}),
    ("boundary-layer", {"eps": 0.02}),
    ("inner-layer", {"eps": 0.01}),
    ("stretched", {"p": 20, "eta": 0.5, "eps": 8e-8}),
    ("anisotropic", {"eps": 0.1}),
]


@pytest.mark.parametrize("name,params", CASES)
def test_source_matches_operator_on_exact(name, params):
    d = problem_def(name, params)
    u = SYMBOLIC_EXACT[name](params)
    terms = {"xx": sym.diff(u, X, 2), "yy": sym.diff(u, Y, 2), "xy": sym.diff(u, X, Y),
             "x": sym.diff(u, X), "y": sym.diff(u, Y)}
    f = {k: sym.lambdify((X, Y), v, "numpy") for k, v in terms.items()}
    uf = sym.lambdify((X, Y), u, "numpy")
    pts = np.random.default_rng(0).uniform(0.05, 0.95, (2, 50))
    x, y = pts
    np.testing.assert_allclose(d.exact(x, y), uf(x, y), rtol=1e-12, atol=1e-12)
    Lu = d.a(x, y) * f["xx"](x, y) + d.b(x, y) * f["yy"](x, y)
    if d.c is not None:
        Lu = Lu + d.c(x, y) * f["xy"](x, y)
    if d.alpha is not None:
        Lu = Lu + d.alpha(x, y) * f["x"](x, y)
    if d.beta is not None:
        Lu = Lu + d.beta(x, y) * f["y"](x, y)
    scale = max(np.max(np.abs(Lu)), 1.0)
    np.testing.assert_allclose(d.g(x, y), Lu, rtol=1e-9, atol=1e-11 * scale)


@pytest.mark.parametrize("name,params", CASES)
def test_second_order_convergence(name, params):
    errs = []
    for J in (5, 6):
        P = assemble(name, J, params)
        x = spsolve(P.A.to_scipy().tocsc(), P.b)
        errs.append(np.max(np.abs(x - P.exact)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.3)


def test_poisson_matrix_entries():
    P = assemble("poisson", 2)
    A = P.A.to_dense() * P.h ** 2
    assert A.shape == (9, 9)
    np.testing.assert_allclose(np.diag(A), 4.0)
    assert A[0, 1] == pytest.approx(-1.0) and A[0, 3] == pytest.approx(-1.0)
    assert A[0, 4] == 0.0


def test_layout_x_fastest():
    P = assemble("general", 2)
    t = np.arange(1, 4) / 4
    np.testing.assert_allclose(P.exact[:3], exact_solution("general", {}, t, t[0]))


def test_nine_point_stencil_weights():
    d = problem_def("mixed", {"eps": 0.01})
    w = stencil_weights(d, np.array([0.5]), np.array([0.5]), 0.25)
    assert set(w) == {(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)}
    assert w[(1, 1)] == pytest.approx(1.99 / (4 * 0.0625))
    assert w[(1, -1)] == pytest.approx(-w[(1, 1)])


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([c for c in CASES]), st.integers(1, 4))
def test_assembly_shapes(case, J):
    name, params = case
    P = assemble(name, J, params)
    m = 2 ** J - 1
    assert P.A.n == m * m and P.b.shape == (m * m,) and P.exact.shape == (m * m,)
    assert np.all(np.isfinite(P.A.values)) and np.all(np.isfinite(P.b))


def test_parameter_validation():
    with pytest.raises(KeyError):
        problem_def("helmholtz")
    with pytest.raises(ValueError):
        problem_def("mixed", {})
    with pytest.raises(ValueError):
        problem_def("poisson", {"eps": 1.0})
    with pytest.raises(ValueError):
        assemble("poisson", 0)
