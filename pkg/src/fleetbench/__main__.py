import sys

from fleetbench.fleetctl.cli import main

sys.exit(main())
