"""Write the curve data behind the overlap-density figures as CSV files.

Usage: python3 scripts/figure_data.py [OUTDIR]   (default: figures/)
Plot with: gnuplot -e "dir='figures'" scripts/plot_figures.gp
"""

from __future__ import annotations

import sys
from pathlib import Path

from overlap_lab import cli

RUNS = {
    # joint density at b = 0.6 on a (zeta, t) grid
    "fig1a_jpdf.csv": ["edge-jpdf", "--b", "0.6", "--zeta", "-6:2:81", "--t", "0.01:6:120"],
    # conditional overlap densities at b = 0.6
    "fig1a_cond_m6.csv": ["cond-density", "--b", "0.6", "--zeta", "-6", "--t", "0.01:8:160"],
    "fig1a_cond_m4.csv": ["cond-density", "--b", "0.6", "--zeta", "-4", "--t", "0.01:8:160"],
    "fig1a_cond_m2.csv": ["cond-density", "--b", "0.6", "--zeta", "-2", "--t", "0.01:8:160"],
    "fig1a_cond_0.csv": ["cond-density", "--b", "0.6", "--zeta", "0", "--t", "0.01:8:160"],
    # bulk weak non-normality limit, a = sqrt 2, w = 1
    "fig1b_bulk.csv": ["bulk-jpdf", "--a", "1.41421356", "--w", "1", "--t", "0.01:6:120"],
    # conditional densities at zeta = -0.5 as non-normality grows
    "fig2a_b04.csv": ["cond-density", "--b", "0.4", "--zeta", "-0.5", "--t", "0.01:8:160"],
    "fig2a_b08.csv": ["cond-density", "--b", "0.8", "--zeta", "-0.5", "--t", "0.01:8:160"],
    "fig2a_b12.csv": ["cond-density", "--b", "1.2", "--zeta", "-0.5", "--t", "0.01:8:160"],
    # strong non-normality limit at delta = -0.5
    "fig2b_strong.csv": ["strong-jpdf", "--delta", "-0.5", "--sigma", "0.01:3:100"],
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    out = Path(argv[0] if argv else "figures")
    out.mkdir(parents=True, exist_ok=True)
    for name, args in RUNS.items():
        code = cli.main(args + ["--out", str(out / name)])
        if code:
            print(f"{name}: exit {code}", file=sys.stderr)
            return code
        print(out / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
