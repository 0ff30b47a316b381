import sys

from fei_lab.cli import main

sys.exit(main())
