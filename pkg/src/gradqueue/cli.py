"""Command-line front end: lemma-check, momentum-sim, train-lines, qlen-demo, zeta-table."""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ExperimentConfig,
    load_config_file,
    run_lemma_check,
    run_momentum_sim,
    run_qlen_demo,
    run_train_lines,
    run_zeta_table,
)

_RUNNERS = {
    "lemma-check": run_lemma_check,
    "momentum-sim": run_momentum_sim,
    "train-lines": run_train_lines,
    "qlen-demo": run_qlen_demo,
    "zeta-table": run_zeta_table,
}

# flag name -> config field
_FLAGS = {
    "--alpha": ("learning_rate", float, "learning rate"),
    "--beta": ("beta", float, "momentum coefficient"),
    "--rho": ("rho", float, "boost clamp constant"),
    "--capacity": ("capacity", int, "gradient queue length"),
    "--k": ("k", int, "cluster count (default: batch_size/optimal_batch)"),
    "--u": ("u", float, "repeating signal value"),
    "--C": ("C", float, "rare signal value"),
    "--N": ("N", int, "sparse period"),
    "--steps": ("steps", int, "number of steps"),
    "--height": ("height", int, "image height"),
    "--width": ("width", int, "image width"),
    "--p": ("p", int, "horizontal-line sample count"),
    "--q": ("q", int, "vertical-line sample count"),
    "--noise-std": ("noise_std", float, "pixel noise standard deviation"),
    "--seed": ("seed", int, "master seed"),
    "--batch-size": ("batch_size", int, "mini-batch size B"),
    "--optimal-batch": ("optimal_batch", int, "reference batch size for choose_k"),
    "--window": ("window", int, "loss window size"),
    "--min-length": ("min_length", int, "minimum effective queue length"),
    "--max-length": ("max_length", int, "maximum effective queue length"),
    "--pattern": ("pattern", str, "qlen-demo loss feed: decreasing|flat|staged|train"),
    "--eq-q": ("eq_q", float, "rare-group expected gradient (zeta-table)"),
    "--eq-p": ("eq_p", float, "frequent-group expected gradient (zeta-table)"),
    "--output": ("output", str, "CSV output path"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradqueue",
        description="Queue-driven sparse-gradient boosting: checks and experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in _RUNNERS.items():
        p = sub.add_parser(name, help=runner.__doc__.splitlines()[0].lower())
        p.add_argument("--config", help="flat key=value config file")
        for flag, (dest, ftype, help_text) in _FLAGS.items():
            p.add_argument(flag, dest=dest, type=ftype, default=None, help=help_text)
        p.add_argument(
            "--no-boost",
            dest="boost_enabled",
            action="store_const",
            const=False,
            default=None,
            help="disable the boost in train-lines",
        )
        p.add_argument(
            "--adam",
            dest="use_adam",
            action="store_const",
            const=True,
            default=None,
            help="use Adam instead of SGDM",
        )
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = load_config_file(args.config, cfg)
    for dest, _, _ in _FLAGS.values():
        value = getattr(args, dest, None)
        if value is not None:
            setattr(cfg, dest, value)
    for dest in ("boost_enabled", "use_adam"):
        value = getattr(args, dest, None)
        if value is not None:
            setattr(cfg, dest, value)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = config_from_args(args)
    try:
        result = _RUNNERS[args.command](cfg)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(result.summary)
    if cfg.output:
        print(f"wrote {cfg.output}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
