import sys

from agrotrack.cli import main

sys.exit(main())
