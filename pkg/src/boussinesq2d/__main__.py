import sys

from boussinesq2d.cli import main

sys.exit(main())
