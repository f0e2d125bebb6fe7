#!/usr/bin/env python3
"""Sphere convergence study (Dof 486 ... 30726), written to sphere.csv."""
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nztsurf.cli import main

if __name__ == "__main__":
    sys.exit(main(["--case", "sphere", "--levels", "2:5",
                   "--csv", "sphere.csv"] + sys.argv[1:]))
