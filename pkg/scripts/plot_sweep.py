"""Log-log plot of dissipation against N from a sweep CSV.

    pip install matplotlib   # or: pip install -e .[plot]
    python scripts/plot_sweep.py results/benchmark.csv results/benchmark.png
"""

import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "tl": ("k", "o"), "rw": ("tab:blue", "s"), "ssp": ("tab:orange", "^"),
    "goe-eig": ("tab:green", "v"), "goe-spacing": ("tab:red", "D"),
    "goe-cumulative": ("tab:purple", "x"),
}


def main(src="results/benchmark.csv", dst="results/benchmark.png"):
    series = defaultdict(list)
    L_star = None
    with open(src, newline="") as fh:
        for r in csv.DictReader(fh):
            series[r["protocol"]].append((int(r["N"]), float(r["dissipation_nats"])))
            L_star = float(r["L_star"]) if r["L_star"] else L_star
    fig, ax = plt.subplots(figsize=(5, 4))
    for p, pts in series.items():
        pts.sort()
        color, marker = STYLE.get(p, ("gray", "."))
        ax.loglog(*zip(*pts), marker=marker, color=color, label=p, lw=1)
    if L_star is not None:
        Ns = sorted({n for pts in series.values() for n, _ in pts})
        ax.loglog(Ns, [L_star ** 2 / (2 * n) for n in Ns], "k--", lw=0.8, label="L*^2 / 2N")
    ax.set_xlabel("N")
    ax.set_ylabel("dissipation (nats)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(dst, dpi=150)
    print(f"wrote {dst}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
