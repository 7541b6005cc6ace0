import sys

from sparcs.cli import main

sys.exit(main())
