"""Grid construction, weighted norms, and the quadratic Bregman distance."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imptik.mesh import Grid, Signal, bregman_error, inner, make_grid, norm


def test_midpoints_and_weight():
    g = make_grid(4)
    assert g.n == 4
    assert g.weight == 0.25
    np.testing.assert_allclose(g.points, [0.125, 0.375, 0.625, 0.875])


def test_grid_rejects_nonpositive_n():
    with pytest.raises(ValueError):
        make_grid(0)
    with pytest.raises(ValueError):
        Grid(n=-3, points=np.array([]), weight=1.0)


def test_signal_validates_shape_and_finiteness():
    g = make_grid(3)
    with pytest.raises(ValueError):
        Signal(grid=g, values=np.zeros(4))
    with pytest.raises(ValueError):
        Signal(grid=g, values=np.array([1.0, np.nan, 0.0]))


def test_norms_constant_signal():
    # total measure is 1, so every norm of the constant c is |c|
    g = make_grid(7)
    u = Signal(grid=g, values=np.full(7, -3.0))
    assert norm(u, "L1") == pytest.approx(3.0)
    assert norm(u, "L2") == pytest.approx(3.0)
    assert norm(u, "Linf") == pytest.approx(3.0)


def test_inner_matches_quadrature():
    g = make_grid(200)
    x = g.points
    u = Signal(grid=g, values=np.sin(np.pi * x))
    v = Signal(grid=g, values=np.cos(np.pi * x))
    # int sin(pi x)^2 = 1/2; int sin cos = 0
    assert inner(u, u) == pytest.approx(0.5, abs=1e-6)
    assert inner(u, v) == pytest.approx(0.0, abs=1e-12)


def test_norm_mode_validation():
    g = make_grid(2)
    u = Signal(grid=g, values=np.ones(2))
    with pytest.raises(ValueError):
        norm(u, "L3")


def test_grid_mismatch_raises():
    u = Signal(grid=make_grid(3), values=np.ones(3))
    v = Signal(grid=make_grid(4), values=np.ones(4))
    with pytest.raises(ValueError):
        inner(u, v)
    with pytest.raises(ValueError):
        bregman_error(u, v)


def test_bregman_is_half_squared_distance():
    g = make_grid(5)
    u = Signal(grid=g, values=np.arange(5.0))
    v = Signal(grid=g, values=np.arange(5.0) + 2.0)
    assert bregman_error(u, v) == pytest.approx(0.5 * 4.0)
    assert bregman_error(u, u) == 0.0


# Magnitudes below 1e-100 are flushed to zero so that squaring inside the
# L2 norm cannot underflow and spoil the exact Holder chain.
finite_values = st.lists(
    st.floats(-1e6, 1e6).map(lambda x: 0.0 if abs(x) < 1e-100 else x),
    min_size=1,
    max_size=40,
)


@given(finite_values, finite_values)
def test_norm_inequalities(a, b):
    n = min(len(a), len(b))
    g = make_grid(n)
    u = Signal(grid=g, values=np.array(a[:n]))
    v = Signal(grid=g, values=np.array(b[:n]))
    l1, l2, linf = norm(u, "L1"), norm(u, "L2"), norm(u, "Linf")
    # Holder chain on a probability measure: L1 <= L2 <= Linf
    assert l1 <= l2 * (1 + 1e-12) + 1e-300
    assert l2 <= linf * (1 + 1e-12) + 1e-300
    # Cauchy-Schwarz
    s = Signal(grid=g, values=u.values + v.values)
    assert norm(s, "L2") <= norm(u, "L2") + norm(v, "L2") + 1e-9 * max(1.0, linf)
    assert abs(inner(u, v)) <= norm(u, "L2") * norm(v, "L2") * (1 + 1e-12) + 1e-300
