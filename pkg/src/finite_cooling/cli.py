"""Command-line entry point: ``finite-cooling MODE [flags]``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure, 4 I/O failure.
"""

from __future__ import annotations

import sys

from . import __version__
from .config import build_parser, parse_config
from .errors import DomainError, NumericalError
from .experiment import run_experiment, write_results

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv[:1] == ["--version"]:
        print(__version__)
        return EXIT_OK
    if not argv:
        build_parser().print_help(sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        # argparse already printed its message
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        records = run_experiment(cfg)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        write_results(records, cfg.output, cfg.fmt, cfg)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
