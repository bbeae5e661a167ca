"""Command-line interface: solve, rates, epsilon, estimate-phi.

Outputs are plain delimited text (CSV with exact documented headers plus
gnuplot-ready .dat files) so results can be inspected and plotted without
extra dependencies.  Every command writes a manifest.json recording the
command, the resolved configuration, the seed, the tool version, and the
produced files; data files carry no timestamps, so identical configurations
reproduce them byte-for-byte.  All randomness flows from explicit seeds.

Exit status is 0 unless a hard error occurs (bad flags, unreadable config);
solver non-convergence is soft and only surfaces as converged=false in the
output records.

Config files for `rates` are flat key=value lines mirroring
ExperimentConfig field names; '#' starts a comment.  Example::

    problem = sine_1
    n = 200
    eta0_base = 0.8
    i_min = 1
    i_max = 12
    trials = 10
    s = 1.0
    fidelity = l1
    alpha_min = 1e-6
    alpha_max = 1.0
    alpha_count = 49
    master_seed = 1234
    grid_gap_tol = 1e-8      # grid-pass duality-gap tolerance
    grid_max_iter = 15000
    polish_gap_tol = 2e-9    # argmin re-polish tolerance
    polish_max_iter = 60000
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, theory
from .experiments import (
    ExperimentConfig,
    GAMMA_DEFAULT,
    estimate_phi,
    run_rate_experiment,
)
from .mesh import Signal, bregman_error, make_grid, norm
from .noise import (
    epsilon_at,
    epsilon_profile,
    eta_bar,
    gen_gaussian,
    gen_pure_impulse,
    gen_salt_pepper,
    improvement_factor,
)
from .operators import assemble, make_test_problem
from .solvers import SolveConfig, solve_l1_dual, solve_l2

TRIALS_HEADER = [
    "eta0",
    "trial",
    "seed",
    "alpha_opt",
    "bregman_error",
    "l1_residual",
    "l2_error",
    "gap",
    "converged",
]
SUMMARY_HEADER = [
    "eta0",
    "mean_bregman",
    "sd_bregman",
    "mean_residual",
    "sd_residual",
    "bound_value",
]

_CONFIG_CASTS = {
    "problem": str,
    "fidelity": str,
    "n": int,
    "i_min": int,
    "i_max": int,
    "trials": int,
    "alpha_count": int,
    "master_seed": int,
    "grid_max_iter": int,
    "polish_max_iter": int,
    "eta0_base": float,
    "s": float,
    "alpha_min": float,
    "alpha_max": float,
    "grid_gap_tol": float,
    "polish_gap_tol": float,
}


def _fmt(x) -> str:
    """Shortest round-trip decimal representation."""
    return repr(float(x))


def _bool(x) -> str:
    return "true" if x else "false"


def _write_manifest(out_dir: Path, command: str, config: dict, master_seed, outputs):
    manifest = {
        "command": command,
        "config": config,
        "master_seed": master_seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(str(o) for o in outputs),
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return path


def _write_table(path: Path, header_comment: str, columns):
    """Space-delimited gnuplot-ready table with a # header line."""
    with open(path, "w") as f:
        f.write(f"# {header_comment}\n")
        for row in zip(*columns):
            f.write(" ".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# solve


def _synthesize_noise(grid, args):
    if args.noise == "none":
        return None
    if args.noise == "salt-pepper":
        return gen_salt_pepper(grid, args.eta0, args.s, args.seed)
    if args.noise == "pure":
        return gen_pure_impulse(grid, args.eta0, args.s, args.seed)
    if args.noise == "gaussian":
        return gen_gaussian(grid, args.sigma, args.seed)
    raise ValueError(f"unknown noise kind {args.noise!r}")


def cmd_solve(args) -> int:
    grid = make_grid(args.n)
    T = assemble(grid)
    prob = make_test_problem(args.problem, grid)
    noise = _synthesize_noise(grid, args)
    g_vals = prob.g_dag_analytic.values.copy()
    if noise is not None:
        g_vals = g_vals + noise.xi.values
    g_obs = Signal(grid=grid, values=g_vals)

    if args.fidelity == "l1":
        cfg = SolveConfig(
            alpha=args.alpha, gap_tol=args.gap_tol, max_iter=args.max_iter, fidelity="l1"
        )
        res = solve_l1_dual(T, g_obs, cfg)
    else:
        res = solve_l2(T, g_obs, args.alpha)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    resid = T.matrix @ res.u.values - g_obs.values
    cols = [grid.points, res.u.values, resid]
    header = "x u residual"
    if res.p is not None:
        cols.append(res.p.values)
        header += " p"
    sol_path = out / "solution.dat"
    _write_table(sol_path, header, cols)

    err = norm(Signal(grid=grid, values=res.u.values - prob.u_dag.values), "L2")
    breg = bregman_error(res.u, prob.u_dag)
    info_path = out / "info.txt"
    with open(info_path, "w") as f:
        for key, val in [
            ("problem", args.problem),
            ("n", args.n),
            ("fidelity", args.fidelity),
            ("alpha", _fmt(args.alpha)),
            ("noise", args.noise),
            ("seed", args.seed),
            ("primal_value", _fmt(res.primal_value)),
            ("dual_value", "" if res.dual_value is None else _fmt(res.dual_value)),
            ("gap", "" if res.gap is None else _fmt(res.gap)),
            ("iterations", res.iterations),
            ("converged", _bool(res.converged)),
            ("l2_error", _fmt(err)),
            ("bregman_error", _fmt(breg)),
            ("u_norm", _fmt(norm(res.u, "L2"))),
        ]:
            f.write(f"{key}={val}\n")

    config = {
        k: getattr(args, k)
        for k in ("problem", "n", "fidelity", "alpha", "noise", "eta0", "s", "sigma",
                  "seed", "gap_tol", "max_iter")
    }
    _write_manifest(out, "solve", config, args.seed, [sol_path.name, info_path.name])
    gap_str = "n/a" if res.gap is None else f"{res.gap:.3e}"
    print(
        f"alpha={args.alpha:g} l2_error={err:.6e} gap={gap_str} "
        f"converged={_bool(res.converged)}"
    )
    return 0


# ---------------------------------------------------------------------------
# rates


def _parse_config_file(path: str) -> dict:
    data = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            data[key.strip()] = value.strip()
    return data


def _build_experiment_config(file_data: dict, overrides: dict) -> ExperimentConfig:
    merged = dict(file_data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    kwargs = {}
    for key, value in merged.items():
        if key not in _CONFIG_CASTS:
            raise ValueError(f"unknown config key {key!r}")
        kwargs[key] = _CONFIG_CASTS[key](value)
    return ExperimentConfig(**kwargs)


def _write_trials_csv(path: Path, records):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRIALS_HEADER)
        for r in records:
            w.writerow(
                [
                    _fmt(r.eta0),
                    r.trial_index,
                    r.seed,
                    _fmt(r.alpha_opt),
                    _fmt(r.bregman_error),
                    _fmt(r.l1_residual),
                    _fmt(r.l2_error),
                    _fmt(r.gap),
                    _bool(r.converged),
                ]
            )


def _write_summary_csv(path: Path, summary):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for k in range(len(summary.eta0)):
            w.writerow(
                [
                    _fmt(summary.eta0[k]),
                    _fmt(summary.mean_bregman[k]),
                    _fmt(summary.sd_bregman[k]),
                    _fmt(summary.mean_residual[k]),
                    _fmt(summary.sd_residual[k]),
                    _fmt(summary.bound_value[k]),
                ]
            )


def _fit_block(summary) -> str:
    lines = [
        f"fidelity = {summary.fidelity}",
        f"kappa_est = {_fmt(summary.kappa_est)}",
        f"slope_bregman = {_fmt(summary.slope_bregman)}",
        f"slope_bregman_halfwidth = {_fmt(summary.slope_bregman_halfwidth)}",
        f"theory_bregman_exponent = {_fmt(summary.theory_bregman_exponent)}",
        f"constant_bregman = {_fmt(summary.constant_bregman)}",
        f"slope_residual = {_fmt(summary.slope_residual)}",
        f"slope_residual_halfwidth = {_fmt(summary.slope_residual_halfwidth)}",
        f"theory_residual_exponent = {_fmt(summary.theory_residual_exponent)}",
        f"constant_residual = {_fmt(summary.constant_residual)}",
        f"floor_bregman = {_fmt(summary.floor_bregman)}",
        f"floor_residual = {_fmt(summary.floor_residual)}",
        f"levels_in_bregman_fit = {int(summary.included_bregman.sum())}/{len(summary.eta0)}",
        f"levels_in_residual_fit = {int(summary.included_residual.sum())}/{len(summary.eta0)}",
    ]
    return "\n".join(lines) + "\n"


def cmd_rates(args) -> int:
    file_data = _parse_config_file(args.config) if args.config else {}
    overrides = {
        key: getattr(args, key, None) for key in _CONFIG_CASTS
    }
    cfg = _build_experiment_config(file_data, overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    progress = None if args.quiet else (lambda line: print(line, file=sys.stderr))
    results = run_rate_experiment(
        cfg, kappa_est=args.kappa_est, gamma=args.gamma, progress=progress
    )

    outputs = []
    fit_blocks = []
    for fid, (records, summary) in results.items():
        suffix = "_l2" if (cfg.fidelity == "both" and fid == "l2") else ""
        trials_path = out / f"trials{suffix}.csv"
        summary_path = out / f"summary{suffix}.csv"
        dat_path = out / f"rates{suffix}.dat"
        _write_trials_csv(trials_path, records)
        _write_summary_csv(summary_path, summary)
        _write_table(
            dat_path,
            "eta0 mean_bregman sd_bregman mean_residual sd_residual bound_value",
            [
                summary.eta0,
                summary.mean_bregman,
                summary.sd_bregman,
                summary.mean_residual,
                summary.sd_residual,
                summary.bound_value,
            ],
        )
        outputs += [trials_path.name, summary_path.name, dat_path.name]
        fit_blocks.append(_fit_block(summary))
        print(
            f"{fid}: slope_bregman={summary.slope_bregman:.4f} "
            f"(theory {summary.theory_bregman_exponent:.4f}), "
            f"slope_residual={summary.slope_residual:.4f} "
            f"(theory {summary.theory_residual_exponent:.4f})"
        )

    fit_path = out / "fit.txt"
    with open(fit_path, "w") as f:
        f.write("\n".join(fit_blocks))
    outputs.append(fit_path.name)

    config_snapshot = {k: getattr(cfg, k) for k in _CONFIG_CASTS}
    cfg_path = out / "config_used.cfg"
    with open(cfg_path, "w") as f:
        for key, value in config_snapshot.items():
            f.write(f"{key} = {value}\n")
    outputs.append(cfg_path.name)

    _write_manifest(out, "rates", config_snapshot, cfg.master_seed, outputs)
    return 0


# ---------------------------------------------------------------------------
# epsilon


def cmd_epsilon(args) -> int:
    if args.input:
        values = np.loadtxt(args.input, ndmin=1)
        grid = make_grid(len(values))
        xi = Signal(grid=grid, values=values)
        seed = None
    else:
        if args.noise == "none":
            raise ValueError("--noise must name a noise kind (or use --input FILE)")
        grid = make_grid(args.n)
        noise = _synthesize_noise(grid, args)
        xi = noise.xi
        seed = noise.seed

    profile = epsilon_profile(xi)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table_path = out / "epsilon.dat"
    _write_table(table_path, "eta eps", [profile.etas, profile.eps])

    ebar = eta_bar(profile, args.gamma, args.kappa)
    factor = improvement_factor(profile, ebar, args.kappa)
    info_path = out / "epsilon_info.txt"
    with open(info_path, "w") as f:
        f.write(f"gamma={_fmt(args.gamma)}\n")
        f.write(f"kappa={_fmt(args.kappa)}\n")
        f.write(f"eta_bar={_fmt(ebar)}\n")
        f.write(f"improvement_factor={_fmt(factor)}\n")
        f.write(f"eps_at_0={_fmt(profile.eps[0])}\n")
        f.write(f"eps_at_eta_bar={_fmt(epsilon_at(profile, ebar))}\n")

    config = {
        k: getattr(args, k, None)
        for k in ("noise", "n", "eta0", "s", "sigma", "seed", "input", "gamma", "kappa")
    }
    _write_manifest(out, "epsilon", config, seed, [table_path.name, info_path.name])
    print(f"eta_bar={ebar:.6g} improvement_factor={factor:.6g}")
    return 0


# ---------------------------------------------------------------------------
# estimate-phi


def cmd_estimate_phi(args) -> int:
    alphas = np.geomspace(args.alpha_min, args.alpha_max, args.alpha_count)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.synthetic:
        try:
            c_str, kappa_str = args.synthetic.split(",")
            c, kappa = float(c_str), float(kappa_str)
        except ValueError:
            raise ValueError("--synthetic expects 'c,kappa' (e.g. 1.0,0.5)")
        phi_true = theory.power_index(c, kappa)
        psis = np.array([theory.psi(phi_true, a) for a in alphas])
        t_grid = np.geomspace(1e-8, 1.0, 241)
        fit = theory.phi_from_psi(np.column_stack([alphas, psis]), t_grid)
        alphas_out, errors_out = alphas, psis
        phi_points = fit.index.points
        c_fit, kappa_fit, residual, degenerate = (
            fit.c,
            fit.kappa,
            fit.fit_residual,
            fit.degenerate,
        )
    else:
        grid = make_grid(args.n)
        T = assemble(grid)
        prob = make_test_problem(args.problem, grid)
        pf = estimate_phi(T, prob, alphas, args.gap_tol, args.max_iter)
        alphas_out, errors_out = pf.alphas, pf.approx_errors
        phi_points = np.column_stack(
            [np.concatenate([[0.0], pf.t_grid]), np.concatenate([[0.0], pf.phi_values])]
        )
        c_fit, kappa_fit, residual, degenerate = pf.c, pf.kappa, pf.fit_residual, pf.degenerate

    psi_path = out / "psi.dat"
    _write_table(psi_path, "alpha approx_error", [alphas_out, errors_out])
    phi_path = out / "phi.dat"
    _write_table(phi_path, "t phi_est", [phi_points[:, 0], phi_points[:, 1]])
    fit_path = out / "phifit.txt"
    with open(fit_path, "w") as f:
        f.write(f"c={_fmt(c_fit)}\n")
        f.write(f"kappa={_fmt(kappa_fit)}\n")
        f.write(f"fit_residual={_fmt(residual)}\n")
        f.write(f"degenerate={_bool(degenerate)}\n")

    config = {
        k: getattr(args, k, None)
        for k in ("problem", "n", "alpha_min", "alpha_max", "alpha_count",
                  "synthetic", "gap_tol", "max_iter")
    }
    _write_manifest(
        out, "estimate-phi", config, None, [psi_path.name, phi_path.name, fit_path.name]
    )
    print(
        f"kappa={kappa_fit:.6g} c={c_fit:.6g} fit_residual={residual:.3e} "
        f"degenerate={_bool(degenerate)}"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_noise_flags(p: argparse.ArgumentParser):
    p.add_argument(
        "--noise",
        choices=["none", "salt-pepper", "pure", "gaussian"],
        default="none",
        help="noise kind added to the analytic data",
    )
    p.add_argument("--eta0", type=float, default=0.05, help="impulse measure fraction")
    p.add_argument("--s", type=float, default=1.0, help="impulse L1 amplitude")
    p.add_argument("--sigma", type=float, default=0.05, help="gaussian noise level")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imptik",
        description="Tikhonov regularization with L1/L2 fidelity under impulsive noise",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single regularized solve")
    p.add_argument("--problem", default="sine_1", help="test problem name")
    p.add_argument("--n", type=int, default=200, help="grid size")
    p.add_argument("--fidelity", choices=["l1", "l2"], default="l1")
    p.add_argument("--alpha", type=float, required=True, help="regularization parameter")
    _add_noise_flags(p)
    p.add_argument("--gap-tol", type=float, default=1e-8, dest="gap_tol")
    p.add_argument("--max-iter", type=int, default=50000, dest="max_iter")
    p.add_argument("--out", default="solve_out", help="output directory")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("rates", help="convergence-rate experiment")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--problem", dest="problem")
    p.add_argument("--n", type=int, dest="n")
    p.add_argument("--eta0-base", type=float, dest="eta0_base")
    p.add_argument("--i-min", type=int, dest="i_min")
    p.add_argument("--i-max", type=int, dest="i_max")
    p.add_argument("--trials", type=int, dest="trials")
    p.add_argument("--s", type=float, dest="s")
    p.add_argument("--fidelity", choices=["l1", "l2", "both"], dest="fidelity")
    p.add_argument("--alpha-min", type=float, dest="alpha_min")
    p.add_argument("--alpha-max", type=float, dest="alpha_max")
    p.add_argument("--alpha-count", type=int, dest="alpha_count")
    p.add_argument("--master-seed", type=int, dest="master_seed")
    p.add_argument("--grid-gap-tol", type=float, dest="grid_gap_tol")
    p.add_argument("--grid-max-iter", type=int, dest="grid_max_iter")
    p.add_argument("--polish-gap-tol", type=float, dest="polish_gap_tol")
    p.add_argument("--polish-max-iter", type=int, dest="polish_max_iter")
    p.add_argument("--gamma", type=float, default=GAMMA_DEFAULT)
    p.add_argument("--kappa-est", type=float, dest="kappa_est",
                   help="skip estimate_phi and use this exponent")
    p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    p.add_argument("--out", default="rates_out", help="output directory")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("epsilon", help="noise impulsiveness profile")
    p.add_argument("--n", type=int, default=200)
    _add_noise_flags(p)
    p.add_argument("--input", help="file of noise samples, one per line")
    p.add_argument("--gamma", type=float, default=GAMMA_DEFAULT)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--out", default="epsilon_out", help="output directory")
    p.set_defaults(func=cmd_epsilon)

    p = sub.add_parser("estimate-phi", help="index-function estimation")
    p.add_argument("--problem", default="sine_1")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--alpha-min", type=float, default=1e-6, dest="alpha_min")
    p.add_argument("--alpha-max", type=float, default=1.0, dest="alpha_max")
    p.add_argument("--alpha-count", type=int, default=49, dest="alpha_count")
    p.add_argument("--gap-tol", type=float, default=1e-8, dest="gap_tol")
    p.add_argument("--max-iter", type=int, default=15000, dest="max_iter")
    p.add_argument("--synthetic", help="'c,kappa': fit closed-form psi samples instead")
    p.add_argument("--out", default="phi_out", help="output directory")
    p.set_defaults(func=cmd_estimate_phi)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
