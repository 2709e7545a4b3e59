"""Write the plot-ready tables for the density panels and median curves.

    python3 tools/figure_data.py [output_dir]

Produces one CSV per density panel (nine cells, three Frank parameters
each), a table of the medians marked on those panels, and the
median-versus-Lambda curves.  Rendering is left to any plotting tool.
"""
import sys

from fcgam.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "figures"
    for fig in ("1", "2"):
        code = main(["density-grid", "--figure", fig, "--output-dir", out])
        if code:
            sys.exit(code)
    print(f"tables written to {out}/")
