import sys

from portsolve.cli import main

sys.exit(main())
