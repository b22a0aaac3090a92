#!/usr/bin/env python3
"""Study 2: expert learning over AR orders on the misspecified switching
process.  Equivalent to ``poco run-exp2``."""

import sys

from poco.cli import main

if __name__ == "__main__":
    sys.exit(main(["run-exp2", *sys.argv[1:]]))
