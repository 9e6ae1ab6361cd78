#!/usr/bin/env python3
"""Left-screen position sweep at eta = -1 (collapse/no-signaling study)."""
import sys
from ddslit.cli import main

if __name__ == "__main__":
    rc = main([
        "run", "--preset", "fig3",
        "--sweep", "y_left=-1mm,-4mm,-8cm",
        "--events", "100000",
        "--out-dir", "out/left_screen/collapse",
    ] + sys.argv[1:])
    if rc:
        sys.exit(rc)
    sys.exit(main([
        "run", "--preset", "fig3", "--no-collapse",
        "--sweep", "y_left=-1mm,-4mm,-8cm",
        "--events", "100000",
        "--out-dir", "out/left_screen/no_collapse",
    ] + sys.argv[1:]))
