#!/usr/bin/env python3
"""Absorbing-boundary detector sweep plus the truncated-trajectory baseline."""
import sys
from ddslit.cli import main

if __name__ == "__main__":
    rc = main([
        "abr", "--preset", "fig5",
        "--kappa", "0.333,1,2,3",
        "--events", "2000",
        "--trajectories", "60",
        "--out-dir", "out/backaction",
    ] + sys.argv[1:])
    if rc:
        sys.exit(rc)
    sys.exit(main([
        "abr", "--preset", "fig5", "--no-backaction",
        "--events", "2000", "--trajectories", "60",
        "--out-dir", "out/backaction",
    ] + sys.argv[1:]))
