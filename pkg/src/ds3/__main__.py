import sys

from ds3.cli import main

sys.exit(main())
