"""Tikhonov regularization with L1/L2 data fidelity under impulsive noise.

Library layout:

* :mod:`imptik.mesh` — midpoint grid, weighted norms, Bregman distance.
* :mod:`imptik.operators` — integral operator assembly and test problems.
* :mod:`imptik.noise` — salt-and-pepper / pure-impulse / Gaussian synthesis
  and the impulsiveness profile eps(eta).
* :mod:`imptik.solvers` — dual box-QP ascent (L1 fidelity) with duality-gap
  certificates; closed-form L2 fidelity.
* :mod:`imptik.theory` — index functions, Fenchel conjugates, error bounds,
  rate exponents.
* :mod:`imptik.experiments` — seeded convergence-rate harness.
* :mod:`imptik.cli` — ``imptik`` command-line entry point.

The iteration kernel in :mod:`imptik._accel` is numba-compiled by default;
set ``IMPTIK_BACKEND=numpy`` to force the pure-numpy twin.
"""

from ._accel import BACKEND
from .mesh import Grid, Signal, bregman_error, inner, make_grid, norm
from .noise import (
    EpsilonProfile,
    NoiseRealization,
    epsilon_at,
    epsilon_profile,
    eta_bar,
    gen_gaussian,
    gen_pure_impulse,
    gen_salt_pepper,
    improvement_factor,
)
from .operators import (
    KernelOperator,
    TestProblem,
    apply,
    apply_adjoint,
    assemble,
    make_test_problem,
)
from .solvers import (
    SolveConfig,
    SolveResult,
    duality_gap,
    primal_objective,
    solve,
    solve_l1_dual,
    solve_l2,
)
from .theory import (
    IndexFunction,
    RateParams,
    alpha_choice_case1,
    apriori_alpha_power,
    bound_bregman,
    bound_residual,
    fenchel_conjugate_numeric,
    gamma_exponent,
    invert_monotone,
    phi_from_psi,
    power_index,
    psi,
    rate_exponents_power,
    sampled_index,
    table1_comparison,
    theta,
    theta_tilde,
)
from .experiments import (
    ExperimentConfig,
    PhiFit,
    RateSummary,
    TrialRecord,
    estimate_phi,
    optimal_alpha_search,
    run_rate_experiment,
    scale_robustness_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Grid",
    "Signal",
    "bregman_error",
    "inner",
    "make_grid",
    "norm",
    "EpsilonProfile",
    "NoiseRealization",
    "epsilon_at",
    "epsilon_profile",
    "eta_bar",
    "gen_gaussian",
    "gen_pure_impulse",
    "gen_salt_pepper",
    "improvement_factor",
    "KernelOperator",
    "TestProblem",
    "apply",
    "apply_adjoint",
    "assemble",
    "make_test_problem",
    "SolveConfig",
    "SolveResult",
    "duality_gap",
    "primal_objective",
    "solve",
    "solve_l1_dual",
    "solve_l2",
    "IndexFunction",
    "RateParams",
    "alpha_choice_case1",
    "apriori_alpha_power",
    "bound_bregman",
    "bound_residual",
    "fenchel_conjugate_numeric",
    "gamma_exponent",
    "invert_monotone",
    "phi_from_psi",
    "power_index",
    "psi",
    "rate_exponents_power",
    "sampled_index",
    "table1_comparison",
    "theta",
    "theta_tilde",
    "ExperimentConfig",
    "PhiFit",
    "RateSummary",
    "TrialRecord",
    "estimate_phi",
    "optimal_alpha_search",
    "run_rate_experiment",
    "scale_robustness_experiment",
    "__version__",
]
