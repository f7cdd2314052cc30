import sys

from eqvidx.index_reports import main

sys.exit(main())
