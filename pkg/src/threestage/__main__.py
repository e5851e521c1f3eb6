import sys

from threestage.cli import main

sys.exit(main())
