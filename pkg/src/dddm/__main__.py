import sys

from dddm.cli import main

sys.exit(main())
