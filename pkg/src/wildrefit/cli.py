"""``wildrefit`` command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numeric or
method failure.
"""

import argparse
import sys

from .core import InvalidInputError, WildRefitError
from .harness import EXPERIMENTS, load_config, resolve_out_dir, run_and_write

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wildrefit",
        description="Run a wild-refitting experiment and write CSV results plus a manifest.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="path to a JSON configuration")
    parser.add_argument("--seed-count", type=int, default=None,
                        help="use seeds 0..N-1 instead of the configured list")
    parser.add_argument("--out", default=None,
                        help="output directory (default: $WILDREFIT_OUT, then config 'out')")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; that code is reserved for I/O
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.seed_count)
    except OSError as exc:
        print(f"wildrefit: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidInputError as exc:
        print(f"wildrefit: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.experiment != args.experiment:
        print(
            f"wildrefit: config is for {cfg.experiment!r}, command was {args.experiment!r}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    out_dir = resolve_out_dir(args.out, cfg)
    try:
        paths = run_and_write(cfg, out_dir)
    except OSError as exc:
        print(f"wildrefit: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except (WildRefitError, ArithmeticError) as exc:
        print(f"wildrefit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
