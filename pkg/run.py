#!/usr/bin/env python3
# run.py
import sys

from app.cli import main  # Subcommands live in app/cli.py


if __name__ == "__main__":
    sys.exit(main())
