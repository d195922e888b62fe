import sys

from adaptfilter.workbench.cli import main

sys.exit(main())
