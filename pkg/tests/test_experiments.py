"""Experiment harness: seeding, alpha search, aggregation, and determinism."""

import math

import numpy as np
import pytest

from imptik.mesh import Signal, make_grid
from imptik.noise import gen_salt_pepper
from imptik.operators import assemble, make_test_problem
from imptik.experiments import (
    ExperimentConfig,
    RateSummary,
    TrialRecord,
    estimate_phi,
    optimal_alpha_search,
    run_rate_experiment,
    scale_robustness_experiment,
    summarize_rates,
    trial_seed_sequence,
)

TINY = dict(n=48, i_min=1, i_max=3, trials=2, alpha_count=13, alpha_min=1e-4)


def _tiny_cfg(**over):
    kw = dict(TINY)
    kw.update(over)
    return ExperimentConfig(**kw)


# ---------------------------------------------------------------------------
# config and seeding


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(alpha_count=5)
    with pytest.raises(ValueError):
        ExperimentConfig(eta0_base=1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(i_min=5, i_max=4)
    with pytest.raises(ValueError):
        ExperimentConfig(fidelity="l7")


def test_config_alphas_property():
    cfg = ExperimentConfig(alpha_min=1e-4, alpha_max=1.0, alpha_count=13)
    a = cfg.alphas
    assert len(a) == 13
    assert a[0] == pytest.approx(1e-4)
    assert a[-1] == pytest.approx(1.0)
    assert np.all(np.diff(a) > 0)


def test_trial_seed_sequence_distinct_and_stable():
    s1 = trial_seed_sequence(1234, 3, 4)
    s2 = trial_seed_sequence(1234, 3, 4)
    s3 = trial_seed_sequence(1234, 3, 5)
    assert s1.entropy == s2.entropy == (1234, 3, 4)
    assert np.random.default_rng(s1).integers(1 << 60) == np.random.default_rng(
        s2
    ).integers(1 << 60)
    assert s3.entropy != s1.entropy


# ---------------------------------------------------------------------------
# optimal_alpha_search


@pytest.fixture(scope="module")
def noisy_instance():
    grid = make_grid(48)
    T = assemble(grid)
    prob = make_test_problem("sine_1", grid)
    noise = gen_salt_pepper(grid, 0.2, 1.0, seed=2024)
    g_obs = Signal(grid=grid, values=prob.g_dag_analytic.values + noise.xi.values)
    return grid, T, prob, g_obs


def test_alpha_search_l1_record_contract(noisy_instance):
    grid, T, prob, g_obs = noisy_instance
    alpha, rec = optimal_alpha_search(
        T, g_obs, prob.u_dag, (1e-4, 1.0, 13), "l1", g_exact=prob.g_dag_analytic
    )
    assert 1e-4 <= alpha <= 1.0
    for key in ("bregman_error", "l1_residual", "l2_error", "gap", "converged"):
        assert key in rec
    assert rec["l2_error"] == pytest.approx(math.sqrt(2 * rec["bregman_error"]), rel=1e-9)
    assert len(rec["sweep_p"]) == 13


def test_alpha_search_l1_beats_fixed_alphas(noisy_instance):
    grid, T, prob, g_obs = noisy_instance
    from imptik.solvers import SolveConfig, solve_l1_dual
    from imptik.mesh import bregman_error

    _, rec = optimal_alpha_search(
        T, g_obs, prob.u_dag, (1e-4, 1.0, 13), "l1", g_exact=prob.g_dag_analytic
    )
    for a in np.geomspace(1e-4, 1.0, 13):
        res = solve_l1_dual(T, g_obs, SolveConfig(alpha=float(a)))
        assert rec["bregman_error"] <= bregman_error(res.u, prob.u_dag) * (1 + 1e-6)


def test_alpha_search_l2_matches_bruteforce(noisy_instance):
    grid, T, prob, g_obs = noisy_instance
    from imptik.solvers import solve_l2
    from imptik.mesh import bregman_error

    alpha, rec = optimal_alpha_search(T, g_obs, prob.u_dag, (1e-4, 1.0, 13), "l2")
    best = min(
        (bregman_error(solve_l2(T, g_obs, float(a)).u, prob.u_dag), float(a))
        for a in np.geomspace(1e-4, 1.0, 13)
    )
    assert rec["bregman_error"] == pytest.approx(best[0], rel=1e-12)
    assert alpha == pytest.approx(best[1])


def test_alpha_search_grid_validation(noisy_instance):
    grid, T, prob, g_obs = noisy_instance
    with pytest.raises(ValueError):
        optimal_alpha_search(T, g_obs, prob.u_dag, np.array([0.5, 0.1]), "l1")
    with pytest.raises(ValueError):
        optimal_alpha_search(T, g_obs, prob.u_dag, (1e-4, 1.0, 13), "linf")


def test_alpha_search_stable_under_grid_refinement(noisy_instance):
    grid, T, prob, g_obs = noisy_instance
    a_coarse, _ = optimal_alpha_search(
        T, g_obs, prob.u_dag, (1e-4, 1.0, 13), "l1", g_exact=prob.g_dag_analytic
    )
    a_fine, _ = optimal_alpha_search(
        T, g_obs, prob.u_dag, (1e-4, 1.0, 25), "l1", g_exact=prob.g_dag_analytic
    )
    ratio = max(a_coarse, a_fine) / min(a_coarse, a_fine)
    assert ratio <= 4.0


# ---------------------------------------------------------------------------
# aggregation


def _fake_records(eta0s, trials, slope, floor=0.0):
    recs = []
    for e in eta0s:
        for t in range(trials):
            val = e**slope + floor
            recs.append(
                TrialRecord(
                    eta0=e,
                    trial_index=t,
                    seed=0,
                    alpha_opt=0.1,
                    bregman_error=val,
                    l1_residual=val,
                    l2_error=math.sqrt(2 * val),
                    gap=0.0,
                    converged=True,
                )
            )
    return recs


def test_summarize_recovers_clean_slope():
    cfg = _tiny_cfg()
    eta0s = [0.8**i for i in range(1, 7)]
    recs = _fake_records(eta0s, 3, slope=3.0)
    summary = summarize_rates(cfg, recs, "l1", kappa_est=0.5, floors=(0.0, 0.0))
    assert summary.slope_bregman == pytest.approx(3.0, abs=1e-9)
    assert summary.slope_residual == pytest.approx(3.0, abs=1e-9)
    assert summary.slope_bregman_halfwidth == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(summary.mean_bregman, np.sort(eta0s)[::-1] ** 3.0)
    assert np.all(summary.included_bregman)
    # theory exponents from kappa_est = 0.5, gamma = 5
    assert summary.theory_bregman_exponent == pytest.approx(5.0 / 3.0)
    assert summary.theory_residual_exponent == pytest.approx(10.0 / 3.0)


def test_summarize_floor_exclusion():
    cfg = _tiny_cfg()
    eta0s = [0.8**i for i in range(1, 7)]
    floor = 0.8 ** (5 * 3.0)  # the two smallest levels sink below 2x floor
    recs = _fake_records(eta0s, 2, slope=3.0)
    summary = summarize_rates(cfg, recs, "l1", kappa_est=0.5, floors=(floor, 0.0))
    assert summary.included_bregman.sum() < len(eta0s)
    assert np.all(summary.included_residual)
    # excluded levels are exactly those with mean below twice the floor
    np.testing.assert_array_equal(
        summary.included_bregman, summary.mean_bregman >= 2 * floor
    )


def test_summarize_degenerate_kappa_uses_gamma():
    cfg = _tiny_cfg()
    recs = _fake_records([0.8, 0.64], 2, slope=5.0)
    summary = summarize_rates(cfg, recs, "l1", kappa_est=1.0, floors=(0.0, 0.0))
    assert summary.theory_bregman_exponent == pytest.approx(5.0)
    assert summary.theory_residual_exponent == pytest.approx(5.0)


# ---------------------------------------------------------------------------
# end-to-end determinism and small runs


def test_run_rate_experiment_deterministic():
    cfg = _tiny_cfg()
    out1 = run_rate_experiment(cfg, kappa_est=0.8)
    out2 = run_rate_experiment(cfg, kappa_est=0.8)
    recs1, sum1 = out1["l1"]
    recs2, sum2 = out2["l1"]
    assert recs1 == recs2
    assert sum1.slope_bregman == sum2.slope_bregman
    np.testing.assert_array_equal(sum1.mean_bregman, sum2.mean_bregman)


def test_run_rate_experiment_both_fidelities():
    cfg = _tiny_cfg(fidelity="both", i_max=2, trials=1)
    out = run_rate_experiment(cfg, kappa_est=0.8)
    assert set(out) == {"l1", "l2"}
    for fid, (recs, summary) in out.items():
        assert summary.fidelity == fid
        assert len(recs) == 2  # 2 levels x 1 trial
        assert all(isinstance(r, TrialRecord) for r in recs)
    # L1 beats L2 on impulsive noise even at toy scale
    assert (
        out["l1"][1].mean_bregman.mean() < out["l2"][1].mean_bregman.mean()
    )


def test_run_rate_experiment_canonical_order():
    cfg = _tiny_cfg(i_max=2, trials=2)
    recs, _ = run_rate_experiment(cfg, kappa_est=0.8)["l1"]
    keys = [(r.eta0, r.trial_index) for r in recs]
    expect = [(cfg.eta0_base**i, t) for i in (1, 2) for t in (0, 1)]
    assert keys == pytest.approx(expect)


def test_progress_callback_sees_each_trial():
    cfg = _tiny_cfg(i_max=2, trials=1)
    lines = []
    run_rate_experiment(cfg, kappa_est=0.8, progress=lines.append)
    assert len(lines) == 2
    assert all("alpha_opt" in ln for ln in lines)


# ---------------------------------------------------------------------------
# estimate_phi


def test_estimate_phi_validation():
    grid = make_grid(16)
    T = assemble(grid)
    prob = make_test_problem("sine_1", grid)
    with pytest.raises(ValueError):
        estimate_phi(T, prob, np.geomspace(1e-4, 1.0, 5))
    with pytest.raises(ValueError):
        estimate_phi(T, prob, np.geomspace(0.1, 1.0, 12))


def test_estimate_phi_benchmark_degenerate():
    grid = make_grid(48)
    T = assemble(grid)
    prob = make_test_problem("benchmark_omega_one", grid)
    fit = estimate_phi(T, prob, np.geomspace(1e-4, 1.0, 13))
    assert fit.degenerate
    assert fit.kappa == 1.0


def test_estimate_phi_sine_nondegenerate():
    grid = make_grid(48)
    T = assemble(grid)
    prob = make_test_problem("sine_1", grid)
    fit = estimate_phi(T, prob, np.geomspace(1e-5, 1.0, 21))
    assert not fit.degenerate
    assert 0.0 < fit.kappa <= 1.0
    assert fit.approx_errors.shape == fit.alphas.shape
    # psi samples are nonnegative and nondecreasing in alpha overall
    assert np.all(fit.approx_errors >= 0.0)
    assert fit.approx_errors[-1] > fit.approx_errors[0]


# ---------------------------------------------------------------------------
# scale robustness


def test_scale_rows_identical_l1_and_monotone_l2():
    rows = scale_robustness_experiment(0.1, [1.0, 10.0], seed=7, n=48, grid_spec=(1e-4, 1.0, 13))
    assert rows[0].s == 1.0 and rows[1].s == 10.0
    assert rows[0].l1_error == pytest.approx(rows[1].l1_error, rel=1e-9)
    assert rows[1].l2_error > rows[0].l2_error


def test_scale_zero_is_noise_free_baseline():
    rows = scale_robustness_experiment(0.1, [0.0], seed=7, n=48, grid_spec=(1e-4, 1.0, 13))
    assert rows[0].s == 0.0
    assert rows[0].l1_error < 1e-3


def test_scale_validation():
    with pytest.raises(ValueError):
        scale_robustness_experiment(0.1, [], seed=1, n=16)
    with pytest.raises(ValueError):
        scale_robustness_experiment(0.1, [-1.0], seed=1, n=16)
