import sys

from forgesat.cli import main

sys.exit(main())
