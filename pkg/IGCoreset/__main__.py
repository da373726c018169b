import sys

from IGCoreset.CLI import main

sys.exit(main())
