"""Command-line front door.

Subcommands: coeffs, gen, train-l4, train-llog, baseline {em,l2},
experiment <preset>, verify <suite>. The worker-thread count for preset
seeds is capped by the MOE_THREADS environment variable. The process
exits 0 iff everything executed passed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import baselines, datagen, harness, losses, metrics, optim, transforms
from .model import (ground_truth_paper_instance, init_random,
                    nonlinearity_from_name, save_parameters, load_parameters)


def _add_common_model_args(p):
    p.add_argument("--k", type=int, default=3, help="number of experts")
    p.add_argument("--d", type=int, default=10, help="input dimension")
    p.add_argument("--sigma", type=float, default=0.05, help="noise level")
    p.add_argument("--g", default="identity",
                   help="activation: identity|relu|sigmoid|leaky_relu")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=100_000, help="training samples")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="moelearn",
        description="Mixture-of-experts parameter recovery toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="print solved transform coefficients")
    p.add_argument("--g", default="identity")
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--slope", type=float, default=0.1,
                   help="slope for leaky_relu")
    p.add_argument("--csv", action="store_true",
                   help="emit machine-readable CSV instead of the table")

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    _add_common_model_args(p)
    p.add_argument("--keep-latents", action="store_true",
                   help="include the expert index column z")
    p.add_argument("--mixture-p", type=float, default=None,
                   help="input mixture weight; standard Gaussian if omitted")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("train-l4", help="SGD on the quartic regressor loss")
    _add_common_model_args(p)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=20000)
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--out-dir", default="runs")

    p = sub.add_parser("train-llog",
                       help="projected GD on the gating log-loss")
    _add_common_model_args(p)
    p.add_argument("--regressors", default=None,
                   help="parameter file fixing A (default: ground truth)")
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--split-T", type=int, default=None)
    p.add_argument("--out-dir", default="runs")

    p = sub.add_parser("baseline", help="run a comparison method")
    p.add_argument("method", choices=("em", "l2"))
    _add_common_model_args(p)
    p.add_argument("--batch", type=int, default=1024)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=20000)
    p.add_argument("--em-iterations", type=int, default=100)
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--out-dir", default="runs")

    p = sub.add_parser("experiment", help="run a named preset")
    p.add_argument("preset", choices=harness.PRESET_NAMES)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--seed-list", default=None,
                   help="comma-separated seeds, overrides the config")
    p.add_argument("--output-dir", default=None)
    for key in sorted(harness._INT_KEYS):
        p.add_argument(f"--{key.replace('_', '-')}", default=None)
    for key in sorted(harness._FLOAT_KEYS | harness._REG_KEYS):
        p.add_argument(f"--{key.replace('_', '-')}", default=None)
    p.add_argument("--g", default=None)
    p.add_argument("--mixture-p", default=None,
                   help="comma-separated mixture weights")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite",
                   choices=tuple(harness.VERIFICATION_SUITES) + ("all",))
    return parser


def _cmd_coeffs(args) -> int:
    kind = nonlinearity_from_name(args.g, args.slope)
    profile = transforms.make_profile(kind, args.sigma)
    c, tc = profile.coeffs, profile.constants
    if args.csv:
        print("g,sigma,alpha,beta,gamma,delta_q,c4,c2")
        print(f"{kind.name},{args.sigma},{c.alpha!r},{c.beta!r},"
              f"{c.gamma!r},{c.delta_q!r},{tc.c4!r},{tc.c2!r}")
    else:
        print(f"activation {kind.name}, sigma={args.sigma}")
        for label, value in (("alpha", c.alpha), ("beta", c.beta),
                             ("gamma", c.gamma), ("delta_q", c.delta_q),
                             ("c4", tc.c4), ("c2", tc.c2)):
            print(f"  {label:8s} {value: .15g}")
        report = transforms.check_validity(profile)
        print(f"  residuals {max(abs(r) for r in report.cond1_residuals):.2e}"
              f" (orthogonality), {abs(report.cond2_residual):.2e} (quadratic)")
    return 0


def _cmd_gen(args) -> int:
    truth = ground_truth_paper_instance(args.k, args.d, args.sigma)
    rng = np.random.default_rng(args.seed)
    if args.mixture_p is None:
        dist = datagen.StandardGaussian()
    else:
        dist = datagen.SymmetricGaussianMixture(
            args.mixture_p, datagen.random_unit_vector(args.d, rng))
    x = datagen.sample_inputs(dist, args.n, args.d, rng)
    data = datagen.sample_moe(truth, x, rng, nonlinearity_from_name(args.g),
                              keep_latents=args.keep_latents)
    with open(args.out, "w") as fh:
        cols = [f"x_{j + 1}" for j in range(args.d)] + ["y"]
        if args.keep_latents:
            cols.append("z")
        fh.write(",".join(cols) + "\n")
        for i in range(data.n):
            row = [repr(v) for v in data.inputs[i]] + [repr(float(data.outputs[i]))]
            if args.keep_latents:
                row.append(str(int(data.latents[i])))
            fh.write(",".join(row) + "\n")
    print(f"wrote {data.n} samples to {args.out}")
    return 0


def _prep_instance(args):
    kind = nonlinearity_from_name(args.g)
    truth = ground_truth_paper_instance(args.k, args.d, args.sigma)
    rng = np.random.default_rng(harness.derive_seed(args.seed, 0))
    x = rng.standard_normal((args.n, args.d))
    data = datagen.sample_moe(truth, x, rng, kind)
    return kind, truth, data


def _write_run(out_dir, name, traj, params=None):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}_trajectory.csv")
    with open(path, "w") as fh:
        fh.write(traj.to_csv())
    print(f"wrote {path}")
    if params is not None:
        ppath = os.path.join(out_dir, f"{name}_params.txt")
        save_parameters(params, ppath)
        print(f"wrote {ppath}")


def _cmd_train_l4(args) -> int:
    from .model import MoEParameters, RegularizationConfig

    kind, truth, data = _prep_instance(args)
    profile = transforms.make_profile(kind, args.sigma)
    reg = RegularizationConfig()
    ctx = losses.L4Context.build(data, profile, reg)
    init = init_random(args.k, args.d, reg.radius,
                       np.random.default_rng(harness.derive_seed(args.seed, 1)))
    cfg = optim.TrainConfig(args.lr, args.batch, args.iterations,
                            record_every=args.record_every,
                            seed=harness.derive_seed(args.seed, 2))
    A, traj = optim.sgd_l4(init.regressors, data, ctx, cfg, truth)
    final = metrics.regressor_error(A, truth.regressors).error
    print(f"final regressor error: {final:.4f}")
    _write_run(args.out_dir, "l4", traj,
               MoEParameters(A, np.zeros((args.k - 1, args.d)), args.sigma))
    return 0


def _cmd_train_llog(args) -> int:
    kind, truth, data = _prep_instance(args)
    if args.regressors:
        A = load_parameters(args.regressors).regressors
    else:
        A = truth.regressors
    gctx = losses.GatingContext(A, args.sigma, 1.0, kind)
    W0 = init_random(args.k, args.d, 1.0,
                     np.random.default_rng(harness.derive_seed(args.seed, 1))).gating
    cfg = optim.TrainConfig(args.lr, batch_size=1, iterations=args.iterations,
                            split_T=args.split_T, record_every=1,
                            seed=harness.derive_seed(args.seed, 2))
    W, traj = optim.projected_gd_gating(W0, gctx, data, cfg,
                                        truth_gating=truth.gating)
    final = metrics.gating_error(W, truth.gating)
    print(f"final gating error: {final:.4f}")
    _write_run(args.out_dir, "llog", traj)
    return 0


def _cmd_baseline(args) -> int:
    from .model import MoEParameters

    kind, truth, data = _prep_instance(args)
    init = init_random(args.k, args.d, 1.0,
                       np.random.default_rng(harness.derive_seed(args.seed, 1)),
                       noise_sigma=args.sigma)
    if args.method == "em":
        cfg = baselines.EmConfig(args.em_iterations,
                                 seed=harness.derive_seed(args.seed, 2))
        params, traj = baselines.run_em(init, data, cfg, truth, kind=kind)
        final = metrics.regressor_error(params.regressors, truth.regressors).error
        _write_run(args.out_dir, "em", traj, params)
    else:
        cfg = optim.TrainConfig(args.lr, args.batch, args.iterations,
                                record_every=args.record_every,
                                seed=harness.derive_seed(args.seed, 2))
        A, W, traj = baselines.l2_joint_sgd(init.regressors, init.gating, data,
                                            cfg, truth, kind)
        final = metrics.regressor_error(A, truth.regressors).error
        _write_run(args.out_dir, "l2", traj,
                   MoEParameters(A, W, args.sigma))
    print(f"final regressor error: {final:.4f}")
    return 0


def _cmd_experiment(args) -> int:
    overrides = {}
    if args.config:
        overrides.update(harness.load_config_file(args.config))
    cli_raw = {}
    for key in (harness._INT_KEYS | harness._FLOAT_KEYS | harness._REG_KEYS):
        val = getattr(args, key, None)
        if val is not None:
            cli_raw[key] = val
    if args.g is not None:
        cli_raw["g"] = args.g
    if args.seed_list is not None:
        cli_raw["seeds"] = args.seed_list
    if args.mixture_p is not None:
        cli_raw["mixture_p"] = args.mixture_p
    overrides.update(harness.parse_overrides(cli_raw))
    overrides.pop("preset", None)
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    cfg = harness.make_config(args.preset, **overrides)
    table = harness.run_preset(cfg)
    for name in sorted(table.series):
        finals = table.finals(name)
        print(f"{name}: final mean {np.nanmean(finals):.4f} "
              f"min {np.nanmin(finals):.4f} max {np.nanmax(finals):.4f}")
    if cfg.output_dir:
        print(f"CSV written under {cfg.output_dir}")
    return 0


def _cmd_verify(args) -> int:
    results = harness.run_verification(args.suite)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "coeffs": _cmd_coeffs,
        "gen": _cmd_gen,
        "train-l4": _cmd_train_l4,
        "train-llog": _cmd_train_llog,
        "baseline": _cmd_baseline,
        "experiment": _cmd_experiment,
        "verify": _cmd_verify,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
