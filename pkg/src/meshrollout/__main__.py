"""Run the command-line interface: ``python -m meshrollout <command>``."""

import sys

from meshrollout.cli import main as _cli_main


def main() -> None:
    """Parse CLI arguments, run the command and exit with its status."""
    sys.exit(_cli_main())


if __name__ == "__main__":
    main()
