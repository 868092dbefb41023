import argparse
from pathlib import Path
from typing import List, Optional

from app.core.config import load_config
from app.core.exceptions import ConfigurationError, InvalidInputError, ProtocolError
from app.core.logger import get_logger
from app.models.schemas import RswrConfig, RunMode
from app.services import oracle, results_io
from app.services.experiment import ExperimentName, run_experiment, summary_lines

logger = get_logger()

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PROTOCOL = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rswr",
        description="Non-iterative Schwarz waveform relaxation for the 1-D wave equation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment and write CSV/report artifacts.")
    run.add_argument("--config", type=Path, default=None, help="Path to a JSON run configuration.")
    run.add_argument(
        "--preset",
        choices=[ExperimentName.N2.value, ExperimentName.N10.value],
        default=None,
        help="Named experiment; overrides subdomain count, sources and duration of the config.",
    )
    run.add_argument(
        "--mode",
        choices=[m.value for m in RunMode],
        default=None,
        help="Runtime mode; defaults to the config's.",
    )
    run.add_argument("--out", type=Path, default=None, help="Artifact directory.")

    compare = commands.add_parser("compare", help="Compare two solution CSVs.")
    compare.add_argument("--a", type=Path, required=True, help="First solution CSV.")
    compare.add_argument("--b", type=Path, required=True, help="Second solution CSV.")
    return parser


def run_command(args: argparse.Namespace) -> int:
    try:
        if args.config is None and args.preset is None:
            raise ConfigurationError("give --config, --preset or both", field="config", kind="missing")
        config = load_config(args.config) if args.config is not None else RswrConfig()
        name = ExperimentName(args.preset) if args.preset else ExperimentName.CUSTOM
        mode = RunMode(args.mode) if args.mode else None
        outcome = run_experiment(name, config, args.out, mode)
    except (ConfigurationError, InvalidInputError) as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_CONFIG
    except ProtocolError as e:
        logger.error(f"Protocol error: {str(e)}")
        return EXIT_PROTOCOL
    print("\n".join(summary_lines(outcome)))
    return EXIT_OK


def compare_command(args: argparse.Namespace) -> int:
    try:
        a = results_io.slab_from_csv(args.a)
        b = results_io.slab_from_csv(args.b)
        errors = oracle.compare(a, b)
    except (ValueError, FileNotFoundError) as e:
        # InvalidInputError and pydantic validation errors are ValueErrors
        logger.error(f"Cannot compare: {str(e)}")
        return EXIT_CONFIG
    print(results_io.format_comparison(errors, [str(args.a), str(args.b)]))
    return EXIT_OK


def dispatch(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run_command(args)
    return compare_command(args)
