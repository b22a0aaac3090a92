#!/usr/bin/env python3
"""Study 3: monthly portfolio selection against a client with hidden,
jumpy risk tolerance.  Equivalent to ``poco run-exp3``; point --config at a
JSON file with ``exp3.csv_path`` set to use a historical dataset instead of
the synthetic stand-in."""

import sys

from poco.cli import main

if __name__ == "__main__":
    sys.exit(main(["run-exp3", *sys.argv[1:]]))
