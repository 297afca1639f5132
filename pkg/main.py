"""Main entry point into the command line."""

import sys

from SNS_ROUGH.cli import cli_main


if __name__ == "__main__":
    sys.exit(cli_main())
