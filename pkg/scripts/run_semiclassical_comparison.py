#!/usr/bin/env python3
"""Semiclassical vs Bohmian arrival times across screen distances."""
import sys
from ddslit.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "semi", "--preset", "fig7",
        "--sweep", "y_left=-1mm,-4mm,-8cm",
        "--events", "100000",
        "--out-dir", "out/semiclassical",
    ] + sys.argv[1:]))
