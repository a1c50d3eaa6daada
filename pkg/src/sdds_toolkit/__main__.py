"""Allow ``python -m sdds_toolkit`` as an alias for the ``sdds`` script."""

import sys

from .cli import main

sys.exit(main())
