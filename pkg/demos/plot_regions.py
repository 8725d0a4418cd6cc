"""Plot a ``regions.csv`` written by ``privmac region``.

Usage::

    privmac region --channel src/privmac/data/qubit_mac.json --out out/
    python3 demos/plot_regions.py out/regions.csv out/regions.png

Needs matplotlib, which is not a dependency of the package.  Each theta (and
the asymptotic region, labelled ``asym``) is drawn as a filled polygon.
"""

import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main(src, dst):
    polys = defaultdict(list)
    with open(src, newline="") as fh:
        for row in csv.DictReader(fh):
            polys[row["theta"]].append((float(row["R1"]), float(row["R2"])))
    fig, ax = plt.subplots(figsize=(5, 5))
    for label, pts in polys.items():
        xs, ys = zip(*(pts + pts[:1]))
        kw = dict(color="black", lw=2) if label == "asym" else dict(alpha=0.4, lw=1)
        ax.plot(xs, ys, label=label if label == "asym" else None, **kw)
        if label != "asym":
            ax.fill(xs, ys, alpha=0.1)
    ax.set_xlabel("R_A (bits)")
    ax.set_ylabel("R_B (bits)")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    ax.legend()
    fig.tight_layout()
    fig.savefig(dst, dpi=120)
    print(f"wrote {dst} ({len(polys)} polygons)")


if __name__ == "__main__":
    main(*sys.argv[1:3])
