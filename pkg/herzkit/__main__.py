"""Entry point for ``python -m herzkit``."""

import sys

from herzkit.cli import main

if __name__ == "__main__":
    sys.exit(main())
