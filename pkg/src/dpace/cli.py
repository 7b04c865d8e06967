"""
Command-line pipeline.

    dpace synth|estimate|trace|features|train|detect|eval --config FILE [--seed N] [--out DIR]

Each stage reads the files written by the previous one from the run
directory ``--out`` and writes its own there.  Exit codes: 0 ok, 1 usage,
2 data error, 3 numerical failure.  ``DPACE_THREADS`` caps the number of
BLAS/OpenMP worker threads.
"""

from __future__ import annotations

import argparse
import os
import sys

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    pass


def _apply_thread_cap(environ=os.environ):
    """Translate DPACE_THREADS into the thread variables of the numeric backends.

    Only effective before numpy is first imported, which the entry point
    guarantees.
    """
    value = environ.get("DPACE_THREADS")
    if value is None:
        return None
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"DPACE_THREADS must be a positive integer, got {value!r}") from None
    if n < 1:
        raise UsageError(f"DPACE_THREADS must be a positive integer, got {value!r}")
    for var in _THREAD_VARS:
        environ[var] = str(n)
    return n


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


COMMANDS = ("synth", "estimate", "trace", "features", "train", "detect", "eval")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dpace", description="WiFi CSI velocity-acceleration sensing and fall detection.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="pipeline INI file")
    p.add_argument("--seed", type=int, default=None, help="override [pipeline] seed")
    p.add_argument("--out", default=".", help="run directory (inputs and outputs)")
    return p


def main(argv=None) -> int:
    try:
        _apply_thread_cap()
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"dpace: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    # deferred so the thread cap is in place before numpy loads
    from . import commands

    return commands.run(args.command, args.config, args.seed, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
