import sys

from .exp_cli import main

sys.exit(main())
