import sys

from rc_gps.cli import main

sys.exit(main())
