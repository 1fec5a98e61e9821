"""Module entry point so ``python -m aew`` behaves like the ``aew`` script."""

import sys

from .cli import main

sys.exit(main())
