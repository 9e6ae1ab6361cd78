#!/usr/bin/env python3
"""Joint arrival-time patterns for different atomic masses."""
import sys
from ddslit.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "run", "--preset", "fig4",
        "--species", "helium-4,sodium-23,cesium-133",
        "--events", "100000",
        "--out-dir", "out/mass_comparison",
    ] + sys.argv[1:]))
