import sys

from twocrystal.io_cli import main

sys.exit(main())
