import sys

from ptppm.cli import main

sys.exit(main())
