import argparse
import logging
import sys
from typing import List, Optional, Sequence

from iso_lab.constants import BOUNDARY_TOL, DEFAULT_C, DEFAULT_EPSILON, DEFAULT_RATE_TRIALS, LOG_FILE
from iso_lab.errors import InvalidInputError, IsoLabError
from iso_lab.runner import RunConfig, run
from iso_lab.types import Command, OutputFormat, SelectionMethod
from iso_lab.utils import load_json, setup_logging


def parse_grid(text: str) -> List[float]:
    """Comma-separated reals, e.g. ``0.2,0.5,0.8``."""
    try:
        values = [float(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iso-lab",
        description="Sets of approximate isomorphism: membership, families, witness measures, selection and traces.",
    )
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("input", help="matrix text file or generator spec gen:kind:n[:param][:seed]")
    parser.add_argument("--epsilon", type=parse_grid, help=f"distortion (grid for estimate), default {DEFAULT_EPSILON}")
    parser.add_argument("--delta", type=float, help="suppression parameter; switches check/enumerate/witness to S")
    parser.add_argument("--C", dest="c_values", type=parse_grid, help=f"Szarek bound (grid for estimate), default {DEFAULT_C}")
    parser.add_argument("--mu", help="counting | file:PATH | inline:w0,w1,...")
    parser.add_argument("--method", choices=[m.value for m in SelectionMethod])
    parser.add_argument("--tol", type=float, help=f"boundary tolerance, default {BOUNDARY_TOL}")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--subset", help="comma-separated zero-based indices (check)")
    parser.add_argument("--trials", type=int, help=f"Monte-Carlo trials (rate), default {DEFAULT_RATE_TRIALS}")
    parser.add_argument("--count", type=int, help="samples per ensemble (estimate)")
    parser.add_argument("--out", help="output file, stdout when omitted")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat])
    parser.add_argument("--plot", dest="plot_dir", help="directory for the estimate figure (JSON + HTML)")
    parser.add_argument("--params", help="JSON file of defaults; command-line flags take precedence")
    parser.add_argument("--log-file", default=LOG_FILE, help="log file, '' to log to stderr only")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merges ``--params`` defaults under the explicit flags and builds the RunConfig."""
    values = {}
    if args.params:
        try:
            values = load_json(args.params)
        except (OSError, ValueError) as e:
            raise InvalidInputError(f"Cannot read parameters file {args.params}: {e}")
        if not isinstance(values, dict):
            raise InvalidInputError(f"Parameters file {args.params} must hold a JSON object.")
        for key in ("epsilon", "C"):
            if key in values and not isinstance(values[key], list):
                values[key] = [values[key]]
        values["c_values"] = values.pop("C", None)
        values["epsilons"] = values.pop("epsilon", None)
        values["plot_dir"] = values.pop("plot", None)
    for key, value in vars(args).items():
        if key in ("command", "input", "params", "log_file"):
            continue
        if value is not None:
            values["epsilons" if key == "epsilon" else key] = value
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(k for k, v in values.items() if k not in known and v is not None)
    if unknown:
        raise InvalidInputError(f"Unknown parameters: {', '.join(unknown)}.")
    values = {k: v for k, v in values.items() if v is not None and k in known}
    try:
        if "method" in values:
            values["method"] = SelectionMethod(values["method"])
        if "format" in values:
            values["format"] = OutputFormat(values["format"])
        return RunConfig(command=Command(args.command), input=args.input, **values)
    except (TypeError, ValueError) as e:
        if isinstance(e, IsoLabError):
            raise
        raise InvalidInputError(f"Invalid parameters: {e}")


def main(argv: Optional[Sequence[str]] = None) -> None:
    """
    Parses the command line, runs one command and exits with its code.
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_file or None)
    try:
        config = config_from_args(args)
    except IsoLabError as e:
        logging.error(f"Invalid configuration: {e}")
        sys.exit(e.exit_code)
    code = run(config)
    sys.exit(code)


if __name__ == "__main__":
    main()
