"""Operator assembly against closed forms and quadrature-order checks."""

import numpy as np
import pytest

from imptik.mesh import Signal, make_grid, norm
from imptik.operators import (
    apply,
    apply_adjoint,
    assemble,
    make_test_problem,
)


def test_matrix_n2_closed_form():
    # x = (1/4, 3/4); diagonal k(x,x) = x(1-x) = 3/16, off-diagonal
    # k(1/4,3/4) = min(1/16, 9/16) = 1/16; entries carry the 1/n = 1/2 weight
    T = assemble(make_grid(2))
    expected = 0.5 * np.array([[3.0 / 16.0, 1.0 / 16.0], [1.0 / 16.0, 3.0 / 16.0]])
    np.testing.assert_allclose(T.matrix, expected, rtol=0, atol=1e-17)


def test_matrix_symmetric_positive_definite():
    T = assemble(make_grid(37))
    np.testing.assert_allclose(T.matrix, T.matrix.T, rtol=0, atol=0)
    evals = np.linalg.eigvalsh(T.matrix)
    assert evals.min() > 0.0


def test_eigenpairs_match_sines():
    # sin(k pi x) are eigenfunctions with eigenvalues ~ 1/(k pi)^2 + O(n^-2)
    n = 256
    g = make_grid(n)
    T = assemble(g)
    for k in (1, 2, 5):
        v = Signal(grid=g, values=np.sin(k * np.pi * g.points))
        w = apply(T, v)
        lam = 1.0 / (k * np.pi) ** 2
        err = norm(Signal(grid=g, values=w.values - lam * v.values), "Linf")
        assert err < 5.0 * k**2 / n**2


def test_norm_bound_close_to_lead_eigenvalue():
    T = assemble(make_grid(64))
    lead = np.linalg.eigvalsh(T.matrix).max()
    assert T.norm_bound == pytest.approx(lead, rel=1e-10)


def test_adjoint_equals_transpose_in_weighted_inner():
    g = make_grid(16)
    T = assemble(g)
    rng = np.random.default_rng(7)
    u = Signal(grid=g, values=rng.normal(size=16))
    p = Signal(grid=g, values=rng.normal(size=16))
    from imptik.mesh import inner

    lhs = inner(apply(T, u), p)
    rhs = inner(u, apply_adjoint(T, p))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_apply_grid_mismatch():
    T = assemble(make_grid(8))
    with pytest.raises(ValueError):
        apply(T, Signal(grid=make_grid(9), values=np.zeros(9)))


def test_quadrature_error_second_order():
    # max-norm defect of A u_dag against analytically sampled data drops ~4x
    # per mesh doubling (second-order midpoint rule)
    errs = {}
    for n in (64, 128):
        g = make_grid(n)
        T = assemble(g)
        prob = make_test_problem("sine_1", g)
        defect = T.matrix @ prob.u_dag.values - prob.g_dag_analytic.values
        errs[n] = np.abs(defect).max()
    ratio = errs[64] / errs[128]
    assert 3.4 <= ratio <= 4.6


def test_problem_names_and_validation():
    g = make_grid(10)
    for name in ("constant_one", "sine_1", "sine_3", "benchmark_omega_one"):
        prob = make_test_problem(name, g)
        assert prob.name == name
        assert prob.u_dag.grid is g
    with pytest.raises(ValueError):
        make_test_problem("sine_0", g)
    with pytest.raises(ValueError):
        make_test_problem("unknown", g)


def test_benchmark_closed_form_data():
    # g = (x - 2x^3 + x^4)/24 solves -g'' = x(1-x)/2 with Dirichlet ends
    try:
        import sympy as sp
    except ImportError:
        pytest.skip("sympy not installed")
    x = sp.symbols("x")
    gexpr = (x - 2 * x**3 + x**4) / 24
    assert sp.simplify(-sp.diff(gexpr, x, 2) - x * (1 - x) / 2) == 0
    assert gexpr.subs(x, 0) == 0 and gexpr.subs(x, 1) == 0


def test_constant_one_data_closed_form():
    try:
        import sympy as sp
    except ImportError:
        pytest.skip("sympy not installed")
    x = sp.symbols("x")
    gexpr = x * (1 - x) / 2
    assert sp.simplify(-sp.diff(gexpr, x, 2) - 1) == 0


def test_benchmark_is_image_of_constant():
    # u_dag of the benchmark equals T applied to the constant source 1
    n = 400
    g = make_grid(n)
    T = assemble(g)
    prob = make_test_problem("benchmark_omega_one", g)
    img = T.matrix @ np.ones(n)
    assert np.abs(img - prob.u_dag.values).max() < 5.0 / n**2
