"""Command-line entry point: ``amlediff {simulate,estimate,coverage,chi2}``.

Exit status 0 on success, 1 on bad input, 2 on numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .errors import InputError, NumericalError
from .estimate import amle_linear, amle_newton
from .experiment import ExperimentConfig, load_config, run_coverage_experiment
from .numerics import NoiseSource, chi2_quantile
from .simulate import TimeGrid, euler_simulate, read_path, write_path

EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="amlediff", description="Approximate MLE for discretely observed diffusions.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="write an Euler path CSV")
    sim.add_argument("--config", help="config file supplying model, theta, T and initial state")
    sim.add_argument("--model", help="registered model name (default heston)")
    sim.add_argument("--l", type=int, help="path has 2^l steps (default 12)")
    sim.add_argument("--seed", type=int, default=0, help="master seed")
    sim.add_argument("--stream", type=int, default=0, help="stream id within the seed")
    sim.add_argument("--out", required=True, help="output CSV")

    est = sub.add_parser("estimate", help="AMLE from a path CSV")
    est.add_argument("--model", default="heston")
    est.add_argument("--path", required=True)
    est.add_argument("--config", help="config file supplying model parameters")

    cov = sub.add_parser("coverage", help="Monte Carlo coverage table")
    cov.add_argument("--config", required=True)
    cov.add_argument("--out", help="write CSV here instead of stdout")
    cov.add_argument("--model")
    cov.add_argument("--seed", type=int)
    cov.add_argument("--p", type=float)
    cov.add_argument("--df", type=int, help="fixed degrees of freedom (overrides df_mode)")
    cov.add_argument("--l", type=int)
    cov.add_argument("--k", type=_int_list, help="comma-separated subsample levels")
    cov.add_argument("--m", type=int, help="replicate count")
    cov.add_argument("--workers", type=int)
    cov.add_argument("--include-fine", action="store_true", help="append the k=l sanity row")

    chi = sub.add_parser("chi2", help="upper-tail chi-square quantile")
    chi.add_argument("--p", type=float, required=True)
    chi.add_argument("--df", type=int, required=True)
    return parser


def _config_for(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    overrides = {
        "model": getattr(args, "model", None),
        "master_seed": getattr(args, "seed", None),
        "p_tail": getattr(args, "p", None),
        "l": getattr(args, "l", None),
        "k_list": getattr(args, "k", None),
        "M": getattr(args, "m", None),
        "workers": getattr(args, "workers", None),
    }
    if getattr(args, "df", None) is not None:
        overrides["df_mode"] = f"fixed:{args.df}"
    if getattr(args, "include_fine", False):
        overrides["include_fine_row"] = True
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "model" in overrides and overrides["model"] != cfg.model:
        # parameters tied to the old model no longer apply
        overrides.update(theta=None, initial_state=None)
    if "l" in overrides and "k_list" not in overrides:
        overrides["k_list"] = tuple(k for k in cfg.k_list if k <= overrides["l"]) or (overrides["l"],)
    return dataclasses.replace(cfg, **overrides)


def _cmd_simulate(args, out):
    cfg = _config_for(args)
    model = cfg.build_model()
    grid = TimeGrid(cfg.T, 1 << cfg.l)
    path = euler_simulate(model, cfg.resolved_theta(), cfg.resolved_initial_state(), grid,
                          NoiseSource(cfg.master_seed, args.stream))
    write_path(path, args.out)
    print(f"wrote {grid.n_steps} steps to {args.out}", file=out)


def _cmd_estimate(args, out):
    cfg = _config_for(args)
    model = cfg.build_model()
    path = read_path(args.path)
    if path.k != model.k:
        raise InputError(f"path has {path.k} state columns, model {model.name!r} expects {model.k}")
    res = amle_linear(model, path) if model.drift_affine else amle_newton(model, path)
    for name, value in zip(model.param_names, res.theta_hat):
        print(f"{name}={value:.17g}", file=out)
    print(f"grad_norm={res.grad_norm:.6g}", file=out)
    print(f"neg_definite={str(res.negative_definite).lower()}", file=out)
    print(f"converged={str(res.converged).lower()}", file=out)


def _cmd_coverage(args, out):
    cfg = _config_for(args)
    csv = run_coverage_experiment(cfg).to_csv()
    dest = args.out or cfg.output
    if dest:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(csv)
    else:
        out.write(csv)


def _cmd_chi2(args, out):
    print(f"{chi2_quantile(args.p, args.df):.6f}", file=out)


COMMANDS = {"simulate": _cmd_simulate, "estimate": _cmd_estimate, "coverage": _cmd_coverage, "chi2": _cmd_chi2}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args, out)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
