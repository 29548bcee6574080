"""Command-line entry point: ``iwnystrom <subcommand> --config cfg.json``."""
import argparse
import json
import sys

from ..errors import InputError, NumericalError
from .config import ExperimentConfig, load_config
from .runner import run_experiment

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
SUBCOMMANDS = ("simulate", "fit", "predict", "sweep", "weights", "diagnose")


def build_parser():
    parser = argparse.ArgumentParser(prog="iwnystrom",
                                     description="Importance-weighted Nystrom kernel ridge regression")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--lambda", dest="lam", type=float, help="fix the regularization")
        p.add_argument("--gamma", type=float, help="fix the RBF bandwidth")
        p.add_argument("--m", type=int, help="fix the Nystrom basis size")
        p.add_argument("--seed", type=int, help="run a single seed")
        p.add_argument("--out", dest="output", help="output directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg: ExperimentConfig = load_config(args.config, mode=args.command.upper()).with_overrides(
            lam=args.lam, gamma=args.gamma, m=args.m,
            seed=args.seed, output=args.output)
        summary = run_experiment(cfg)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = {k: v for k, v in summary.items() if k != "cv_table"}
    print(json.dumps(summary, default=float))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
