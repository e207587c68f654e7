import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pyredeem.experiments.config import parse_config, with_overrides
from pyredeem.experiments.families import EXPERIMENTS, run_ledger
from pyredeem.experiments.report import emit_report
from pyredeem.models.config import MECHANISMS
from pyredeem.utils.errors import ConfigError, RedeemError

logger = logging.getLogger("pyredeem")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as error:
        message = f"expected comma-separated numbers, got '{text}'"
        raise argparse.ArgumentTypeError(message) from error
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML experiment configuration")
    parser.add_argument("--seed", type=int, help="master seed, overrides the file")
    parser.add_argument("--runs", type=int, help="Monte Carlo replicates per cell")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--strategy",
        choices=["major", "minor", "prop", "random"],
        help="oversupply rationing strategy",
    )
    parser.add_argument("--rho", type=_float_list, help="informed ratios, e.g. 0,0.5,1")
    parser.add_argument("--sigma", type=_float_list, help="estimation noise levels")
    parser.add_argument("--preset", choices=["default", "over-supply"], help="server preset")
    parser.add_argument("--workers", type=int, help="worker processes")
    parser.add_argument("--no-progress", action="store_true", help="hide progress bars")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyredeem",
        description="Simulate priced data-redemption mechanisms and write result tables.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "compare": "all mechanisms across informed ratios",
        "robustness": "personalised pricing under estimation noise",
        "convergence": "price increments and fulfillment over dB and population size",
        "oversupply": "the four rationing strategies on matched seeds",
        "sweep": "one-at-a-time parameter sweep",
    }
    for name, text in descriptions.items():
        _common(commands.add_parser(name, help=text, description=text))
    ledger = commands.add_parser(
        "ledger", help="export the trades and outcome of one replicate"
    )
    _common(ledger)
    ledger.add_argument("--replicate", type=int, default=0, help="replicate index")
    ledger.add_argument(
        "--mechanism", choices=MECHANISMS, default="IIQ", help="mechanism to run"
    )
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        config = with_overrides(
            parse_config(args.config),
            seed=args.seed,
            runs=args.runs,
            out=args.out,
            strategy=args.strategy,
            rho=args.rho,
            sigma=args.sigma,
            preset=args.preset,
            workers=args.workers,
        )
        directory = Path(config.output_dir) / args.command
        if args.command == "ledger":
            ledger, outcome = run_ledger(config, directory, args.replicate, args.mechanism)
            logger.info("Wrote %s and %s", ledger, outcome)
            return EXIT_OK
        report = EXPERIMENTS[args.command](config, progress=not args.no_progress)
        emit_report(report, directory)
    except ConfigError as error:
        logger.error("Configuration error: %s", error)
        return EXIT_CONFIG
    except RedeemError as error:
        logger.error("%s failed: %s", args.command, error)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
