#!/usr/bin/env python3
"""Entry point for pkcontrol.

This module provides the main entry point when running the harness
via `python -m pkcontrol` or the installed `pkcontrol` command.
"""
from __future__ import annotations

import sys


def main() -> int:
    """Main entry point for the pkcontrol command-line harness.

    Returns:
        Exit code (0 for success, non-zero for errors).
    """
    # Import here to avoid slow startup for --help
    from pkcontrol.cli import run_cli

    return run_cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
