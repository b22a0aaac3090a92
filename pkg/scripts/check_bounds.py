#!/usr/bin/env python3
"""Batch verification of the regret bounds (single-step, k-step, expert
pool) and the aggregation inequality.  Equivalent to ``poco check-bounds``;
exits nonzero if any run violates a bound."""

import sys

from poco.cli import main

if __name__ == "__main__":
    sys.exit(main(["check-bounds", *sys.argv[1:]]))
