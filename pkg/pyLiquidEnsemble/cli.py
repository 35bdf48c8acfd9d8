from .experimentObject import ExperimentConfig, emit_logs, run_experiment, sweep
from .streamObject import MNIST_FILES, load_mnist
from . import misc as mc

from dataclasses import replace
from pathlib import Path
import argparse
import unittest
import json
import sys

# Flag destination -> ExperimentConfig field
OVERRIDES = {"seed": "seed", "out": "out", "trials": "trials", "k": "k", "k_s": "k_s", "k_e": "k_e",
             "metric": "metric", "prob_fn": "prob_fn", "mechanism": "mechanism", "dataset": "dataset",
             "scenario": "scenario", "window": "w", "batch_size": "B", "n": "n", "data_dir": "data_dir",
             "workers": "workers"}

SELFTEST_MODULES = ["DelegationTests", "PerformanceTests", "ProbabilityTests", "LearnerTests", "StreamTests",
                    "EnsembleTests"]


def _experiment_flags():
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--config", type=str, help="Flat YAML file with one key per ExperimentConfig field")
    flags.add_argument("--seed", type=int)
    flags.add_argument("--out", type=str, help="Output directory")
    flags.add_argument("--trials", type=int)
    flags.add_argument("--k", type=int, nargs="+", help="Guru count; several values span a sweep")
    flags.add_argument("--k-s", dest="k_s", type=int, nargs="+", help="Student-Expert learning gurus")
    flags.add_argument("--k-e", dest="k_e", type=int, nargs="+", help="Student-Expert predicting experts")
    flags.add_argument("--metric", type=str, nargs="+", choices=["accuracy", "balanced_accuracy", "macro_f1"])
    flags.add_argument("--prob-fn", dest="prob_fn", type=str, nargs="+",
                       choices=["random_better", "proportional_better", "proportional_weighted", "max_diversity"])
    flags.add_argument("--mechanism", type=str,
                       choices=["kbat", "student_expert", "full_ensemble", "single_learner"])
    flags.add_argument("--dataset", type=str, choices=["split_mnist", "rotated_mnist", "synthetic"])
    flags.add_argument("--scenario", type=str, choices=["class_incremental", "domain_incremental"])
    flags.add_argument("--window", type=int, help="Trend window w")
    flags.add_argument("--batch-size", dest="batch_size", type=int)
    flags.add_argument("--n", type=int, help="Ensemble size")
    flags.add_argument("--data-dir", dest="data_dir", type=str, help="Directory of the four MNIST IDX files")
    flags.add_argument("--workers", type=int, help="Processes running trials in parallel")
    flags.add_argument("--quiet", action="store_true", help="Silence progress lines")
    return flags


def build_parser():
    parser = argparse.ArgumentParser(prog="pyLiquidEnsemble",
                                     description="Liquid democracy delegation for continual learning ensembles")
    commands = parser.add_subparsers(dest="command", required=True)

    flags = _experiment_flags()
    commands.add_parser("run", parents=[flags], help="Run every trial of one config and write its logs")
    commands.add_parser("sweep", parents=[flags], help="Run the grid spanned by list valued k, metric and prob_fn")

    validate = commands.add_parser("validate-data", help="Parse and check the four MNIST IDX files")
    validate.add_argument("--data-dir", dest="data_dir", type=str, default="data/mnist")

    commands.add_parser("selftest", help="Run the invariant suite on synthetic data")
    return parser


def _scalar(value, grid):
    """Unwrap single element flag lists; keep lists for a sweep"""
    if isinstance(value, list) and (len(value) == 1 or not grid):
        return value[0] if len(value) == 1 else value
    return value


def resolve_config(args, grid=False):
    """
    The config file, or the defaults, with every given flag applied on top. A flag that disagrees with the config
    file wins, and a notice is printed.

    :rtype: ExperimentConfig
    """
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.quiet:
        cfg = replace(cfg, verbose=False)

    for flag, field in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        value = _scalar(value, grid)
        if args.config and getattr(cfg, field) != value:
            mc.report(f"--{flag.replace('_', '-')} {value} overrides {field}: {getattr(cfg, field)} of "
                      f"{args.config}", cfg.verbose)
        cfg = replace(cfg, **{field: value})
    return cfg


def command_run(args):
    cfg = resolve_config(args).resolve().validate()
    result = run_experiment(cfg)
    emit_logs(result, cfg.out)
    mc.report(str(result), cfg.verbose)
    return 0


def command_sweep(args):
    cfg = resolve_config(args, grid=True)
    table = sweep(cfg)
    mc.report(f"Sweep of {len(table)} cells written to {cfg.out}", cfg.verbose)
    return 0


def command_validate_data(args):
    for split, names in MNIST_FILES.items():
        dataset = load_mnist(args.data_dir, split)
        for name in names:
            print(f"{Path(args.data_dir, name)}: {len(dataset)} examples")
        counts = [int((dataset.labels == digit).sum()) for digit in range(10)]
        print(f"{split}: {len(dataset)} images of {dataset.images.shape[1]}x{dataset.images.shape[2]}, "
              f"per digit {counts}")
    return 0


def command_selftest(_):
    loader = unittest.TestLoader()
    suite = unittest.TestSuite(loader.loadTestsFromName(f"pyLiquidEnsemble.Tests.{name}")
                               for name in SELFTEST_MODULES)
    outcome = unittest.TextTestRunner(verbosity=1).run(suite)
    return 0 if outcome.wasSuccessful() else 1


COMMANDS = {"run": command_run, "sweep": command_sweep, "validate-data": command_validate_data,
            "selftest": command_selftest}


def error_line(error):
    """One JSON line naming the failure, taken from the heading of an errors_codes message"""
    message = str(error).strip()
    heading = message.splitlines()[0] if message else type(error).__name__
    return json.dumps({"error": heading, "type": type(error).__name__, "message": message})


def main(argv=None):
    """
    Entry point of the command line. Returns 0 on success and 1 on any failure, after writing the error line to
    stderr; argparse exits with 2 on unknown flags.
    """
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, TypeError, RuntimeError, OSError, AssertionError) as error:
        print(error_line(error), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
