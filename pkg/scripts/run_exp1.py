#!/usr/bin/env python3
"""Study 1: plain vs predictive descent on the switching process.

Equivalent to ``poco run-exp1``; flags pass through (--out, --seed, --reps,
--config, --quiet).
"""

import sys

from poco.cli import main

if __name__ == "__main__":
    sys.exit(main(["run-exp1", *sys.argv[1:]]))
