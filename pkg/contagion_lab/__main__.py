import sys

from .contagion_lab import main

sys.exit(main())
