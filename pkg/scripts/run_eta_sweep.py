#!/usr/bin/env python3
"""Entanglement sweep on the fig2 geometry (joint + marginal patterns)."""
import sys
from ddslit.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "run", "--preset", "fig2",
        "--sweep", "eta=-1,-0.5,0,0.5,1",
        "--events", "100000",
        "--trajectories", "40",
        "--out-dir", "out/eta_sweep",
    ] + sys.argv[1:]))
