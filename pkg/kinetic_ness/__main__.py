"""Run the command line interface with python -m kinetic_ness."""

import sys

from .cli import main

sys.exit(main())
