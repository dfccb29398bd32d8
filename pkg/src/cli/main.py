"""
Command-line entry point

    evnet [--config PATH] [--seed N] [--out DIR] [--threads N] [--set key=value ...] <command>

Exit codes: 0 ok, 1 invalid config or input, 2 missing/unwritable path,
3 non-finite training loss, 4 calibration failure.
"""

import argparse
import os
import sys
from typing import List, Optional

from src.cli.commands import (
    RunContext,
    cmd_baseline,
    cmd_compare_losses,
    cmd_coverage,
    cmd_eval,
    cmd_gen_data,
    cmd_oracle,
    cmd_rastrigin,
    cmd_train,
)
from src.cli.run_config import load_run_config
from src.utils.exceptions import (
    CalibrationFailure,
    DiagnosticError,
    EvidenceNetworkError,
    InvalidArgumentError,
    NumericError,
)
from src.utils.logger import LEVELS, get_logger, set_log_level

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PATH = 2
EXIT_NUMERIC = 3
EXIT_CALIBRATION = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evnet",
        description="Estimate log Bayes factors with Evidence Networks",
    )
    parser.add_argument("--config", help="YAML run config (defaults apply when omitted)")
    parser.add_argument("--seed", type=int, help="run seed (overrides config)")
    parser.add_argument("--out", help="output directory (overrides io.out_dir)")
    parser.add_argument("--threads", type=int, help="worker threads (fallback: EVNET_THREADS)")
    parser.add_argument("--log-level", choices=LEVELS, type=str.upper, help="override LOG_LEVEL for this run")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override a dotted config key, e.g. train.batch_size=64",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate a labelled dataset")
    gen.add_argument("--eval", action="store_true", help="write the evaluation dataset instead")
    sub.add_parser("train", help="train an ensemble on the dataset")
    ev = sub.add_parser("eval", help="predict log K for the evaluation dataset")
    ev.add_argument("--observed", help="CSV file holding one data vector")
    cov = sub.add_parser("coverage", help="blind coverage test")
    cov.add_argument("--debug-scale-logits", type=float, help="multiply log K before the test")
    sub.add_parser("rastrigin", help="network vs quadrature log K on a 2-D grid")
    sub.add_parser("baseline", help="Gaussian-MLE baseline vs ensemble residuals")
    sub.add_parser("oracle", help="dump exact log K for the evaluation dataset")
    sub.add_parser("compare-losses", help="single-network RMSE for each configured loss")
    return parser


def resolve_threads(flag: Optional[int]) -> int:
    if flag is not None:
        threads = flag
    else:
        env = os.getenv("EVNET_THREADS", "1")
        try:
            threads = int(env)
        except ValueError:
            raise InvalidArgumentError(f"EVNET_THREADS must be an integer, got '{env}'")
    if threads < 1:
        raise InvalidArgumentError(f"threads must be >= 1, got {threads}")
    return threads


def run(args: argparse.Namespace) -> int:
    if args.log_level:
        set_log_level(args.log_level)
    config = load_run_config(args.config, args.overrides, args.seed, args.out)
    ctx = RunContext(config, threads=resolve_threads(args.threads))
    logger.info(f"evnet {args.command}: seed {config.seed}, config {config.hash[:12]}")

    if args.command == "gen-data":
        return cmd_gen_data(ctx, evaluation=args.eval)
    if args.command == "train":
        return cmd_train(ctx)
    if args.command == "eval":
        return cmd_eval(ctx, observed=args.observed)
    if args.command == "coverage":
        return cmd_coverage(ctx, debug_scale_logits=args.debug_scale_logits)
    if args.command == "rastrigin":
        return cmd_rastrigin(ctx)
    if args.command == "baseline":
        return cmd_baseline(ctx)
    if args.command == "oracle":
        return cmd_oracle(ctx)
    return cmd_compare_losses(ctx)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except CalibrationFailure as exc:
        logger.error(f"Calibration failed: {exc}")
        return EXIT_CALIBRATION
    except NumericError as exc:
        logger.error(f"Numerical failure: {exc}")
        return EXIT_NUMERIC
    except DiagnosticError as exc:
        logger.error(f"Validation not possible: {exc}")
        return EXIT_INVALID
    except EvidenceNetworkError as exc:
        logger.error(f"Invalid input: {exc}")
        return EXIT_INVALID
    except OSError as exc:
        logger.error(f"Path error: {exc}")
        return EXIT_PATH


if __name__ == "__main__":
    sys.exit(main())
