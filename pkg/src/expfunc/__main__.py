"""Allow ``python -m expfunc`` as an alias for the ``expfunc`` script."""

import sys

from expfunc.cli import main

if __name__ == "__main__":
    sys.exit(main())
