import sys

from .cli_bench.cli import main

sys.exit(main())
