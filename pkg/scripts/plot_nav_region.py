"""Draw the (x, y) reachable region of a navigation run from a region file.

    parreach --model nav:3 --bound 7 --step 1e-2 --out-region nav3.txt
    python3 scripts/plot_nav_region.py nav3.txt --grid 3 --out nav3.png

Needs matplotlib, which the package itself does not depend on.
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402
import numpy as np  # noqa: E402


def read_region(path):
    polys, levels = [], []
    with open(path) as fh:
        for line in fh:
            fields = line.split()
            levels.append(int(fields[1]))
            polys.append(np.array(fields[2:], dtype=float).reshape(-1, 2))
    return polys, np.array(levels)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("region")
    ap.add_argument("--grid", type=int, default=None, help="draw an n x n cell grid")
    ap.add_argument("--out", default="region.png")
    args = ap.parse_args(argv)
    polys, levels = read_region(args.region)
    fig, ax = plt.subplots(figsize=(6, 6))
    colors = plt.cm.viridis(levels / max(1, levels.max()))
    ax.add_collection(PolyCollection(polys, facecolors=colors, edgecolors="none", alpha=0.6))
    if args.grid:
        for k in range(args.grid + 1):
            ax.axhline(k, color="0.7", lw=0.5)
            ax.axvline(k, color="0.7", lw=0.5)
    ax.autoscale()
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(args.out, dpi=150, bbox_inches="tight")
    print(f"{len(polys)} polygons -> {args.out}")


if __name__ == "__main__":
    main()
