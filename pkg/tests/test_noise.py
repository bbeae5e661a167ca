"""Noise synthesis determinism and the impulsiveness profile against oracles."""

import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imptik.mesh import Signal, make_grid, norm
from imptik.noise import (
    epsilon_at,
    epsilon_profile,
    eta_bar,
    gen_gaussian,
    gen_pure_impulse,
    gen_salt_pepper,
    improvement_factor,
    noise_from_text,
    noise_to_text,
)


def _profile_of(values):
    n = len(values)
    return epsilon_profile(Signal(grid=make_grid(n), values=np.asarray(values, float)))


# ---------------------------------------------------------------------------
# profile values


def test_profile_worked_example():
    # |xi| = (4, 2, 0, 0): eps(0) = 6/4, drop one -> 2/4, drop two -> 0
    prof = _profile_of([4.0, -2.0, 0.0, 0.0])
    np.testing.assert_allclose(prof.etas, [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(prof.eps, [1.5, 0.5, 0.0, 0.0, 0.0])
    assert epsilon_at(prof, 0.125) == pytest.approx(1.0)
    assert epsilon_at(prof, 1.0) == 0.0


def test_profile_matches_exhaustive_subset_minimum():
    # dyadic integer values make the subset sums exact in float arithmetic
    rng = np.random.default_rng(123)
    for _ in range(25):
        n = int(rng.integers(1, 10))
        xi = rng.integers(-8, 9, size=n).astype(float)
        prof = _profile_of(xi)
        a = np.abs(xi)
        for j in range(n + 1):
            best = min(
                a[list(set(range(n)) - set(drop))].sum()
                for drop in itertools.combinations(range(n), j)
            )
            assert prof.eps[j] == best / n


def test_profile_right_slope_at_zero_is_max_abs():
    xi = np.array([3.0, -7.0, 1.0, 0.5])
    prof = _profile_of(xi)
    n = len(xi)
    slope = (prof.eps[1] - prof.eps[0]) * n
    assert slope == -np.abs(xi).max()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=30))
def test_profile_convex_decreasing(vals):
    prof = _profile_of(vals)
    eps = prof.eps
    assert eps[-1] == 0.0
    assert np.all(np.diff(eps) <= 1e-12)
    # convexity: increments (which are -|xi| sorted descending) nondecreasing
    inc = np.diff(eps)
    assert np.all(np.diff(inc) >= -1e-12 * max(1.0, np.abs(vals).max()))


def test_epsilon_at_domain():
    prof = _profile_of([1.0, 2.0])
    with pytest.raises(ValueError):
        epsilon_at(prof, -0.01)
    with pytest.raises(ValueError):
        epsilon_at(prof, 1.01)


# ---------------------------------------------------------------------------
# generators


def test_salt_pepper_structure():
    g = make_grid(200)
    noise = gen_salt_pepper(g, eta0=0.1, s=2.0, seed=5)
    xi = noise.xi.values
    nz = xi != 0.0
    assert nz.sum() == 20  # ceil(0.1 * 200)
    np.testing.assert_allclose(np.abs(xi[nz]), 2.0 / 0.1)
    assert noise.kind == "salt_pepper"
    assert noise.params == {"eta0": 0.1, "s": 2.0}
    assert norm(noise.xi, "L1") == pytest.approx(2.0)


def test_pure_impulse_structure_and_sign():
    g = make_grid(100)
    noise = gen_pure_impulse(g, eta0=0.25, s=1.0, seed=6)
    xi = noise.xi.values
    nz = xi != 0.0
    assert nz.sum() == 25
    assert np.all(xi[nz] == 4.0)  # all positive spikes s/eta0


def test_carrier_count_uses_ceiling():
    g = make_grid(100)
    noise = gen_pure_impulse(g, eta0=0.123, s=1.0, seed=0)
    assert (noise.xi.values != 0).sum() == 13


def test_same_seed_same_carrier_across_kinds():
    # salt-pepper and pure impulse with one seed share the carrier set
    g = make_grid(150)
    a = gen_salt_pepper(g, 0.2, 1.0, seed=99)
    b = gen_pure_impulse(g, 0.2, 5.0, seed=99)
    np.testing.assert_array_equal(a.xi.values != 0, b.xi.values != 0)


def test_generator_determinism_and_seed_kinds():
    g = make_grid(64)
    x1 = gen_salt_pepper(g, 0.1, 1.0, seed=11).xi.values
    x2 = gen_salt_pepper(g, 0.1, 1.0, seed=11).xi.values
    np.testing.assert_array_equal(x1, x2)
    s1 = gen_salt_pepper(g, 0.1, 1.0, np.random.SeedSequence((3, 4))).xi.values
    s2 = gen_salt_pepper(g, 0.1, 1.0, np.random.SeedSequence((3, 4))).xi.values
    np.testing.assert_array_equal(s1, s2)
    assert not np.array_equal(x1, s1)


def test_gaussian_moments_and_determinism():
    g = make_grid(4000)
    noise = gen_gaussian(g, sigma=3.0, seed=1)
    assert noise.xi.values.std() == pytest.approx(3.0, rel=0.05)
    again = gen_gaussian(g, sigma=3.0, seed=1)
    np.testing.assert_array_equal(noise.xi.values, again.xi.values)


def test_generator_validation():
    g = make_grid(10)
    with pytest.raises(ValueError):
        gen_salt_pepper(g, 0.0, 1.0, seed=1)
    with pytest.raises(ValueError):
        gen_salt_pepper(g, 1.5, 1.0, seed=1)
    with pytest.raises(ValueError):
        gen_pure_impulse(g, -0.1, 1.0, seed=1)
    with pytest.raises(ValueError):
        gen_gaussian(g, -1.0, seed=1)


# ---------------------------------------------------------------------------
# pure-impulse closed form and eta_bar


def test_pure_impulse_profile_closed_form():
    # with eta0*n integral, eps(eta) = s(1 - eta/eta0) exactly on [0, eta0]
    g = make_grid(100)
    s, eta0 = 2.0, 0.25
    prof = epsilon_profile(gen_pure_impulse(g, eta0, s, seed=3).xi)
    for eta in np.linspace(0.0, eta0, 41):
        assert epsilon_at(prof, eta) == pytest.approx(s * (1 - eta / eta0), abs=1e-12)
    assert epsilon_at(prof, eta0 + 0.05) == 0.0


def test_eta_bar_closed_form_crossing():
    # pure impulse s=1, eta0=1/2, gamma/(2-kappa) = 1: crossing of
    # 1 - 2 eta = eta at eta = 1/3
    g = make_grid(500)
    prof = epsilon_profile(gen_pure_impulse(g, 0.5, 1.0, seed=8).xi)
    val = eta_bar(prof, gamma=1.5, kappa=0.5)
    assert val == pytest.approx(1.0 / 3.0, abs=1e-3)
    imp = improvement_factor(prof, val, kappa=0.5)
    assert imp == pytest.approx((1.0 / (1.0 / 3.0)) ** 0.5, rel=1e-2)


def test_eta_bar_zero_profile_warns():
    prof = _profile_of([0.0, 0.0, 0.0])
    with pytest.warns(UserWarning):
        assert eta_bar(prof, gamma=5.0, kappa=0.5) == 0.0
    assert improvement_factor(prof, 0.0, kappa=0.5) == math.inf


def test_eta_bar_validation():
    prof = _profile_of([1.0, 2.0])
    with pytest.raises(ValueError):
        eta_bar(prof, gamma=0.0, kappa=0.5)
    with pytest.raises(ValueError):
        eta_bar(prof, gamma=1.0, kappa=1.5)


# ---------------------------------------------------------------------------
# text round trip


def test_noise_text_round_trip():
    g = make_grid(32)
    noise = gen_salt_pepper(g, 0.2, 1.5, seed=77)
    text = noise_to_text(noise)
    back = noise_from_text(text)
    np.testing.assert_array_equal(back.xi.values, noise.xi.values)
    assert back.seed == noise.seed
    assert back.kind == noise.kind
    assert back.params == noise.params
    # floats survive exactly (repr round trip)
    assert noise_to_text(back) == text
