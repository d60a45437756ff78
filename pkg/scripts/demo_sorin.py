#!/usr/bin/env python3
"""Thin wrapper around the CLI demo for the bundled quitting game."""

import sys

from stogame.cli import main

if __name__ == "__main__":
    sys.exit(main(["demo-sorin", "--out", "out"] + sys.argv[1:]))
