"""Dissipation of every coherent protocol when cooling from beta = 1e-8 to beta_f = 10.

Writes results/benchmark.csv (plus its .meta.json sidecar) and prints a small
table. Takes about a minute, dominated by GOE sampling at N = 1000.

    python scripts/benchmark_sweep.py [--seed 20240] [--m 500] [--out results/benchmark.csv]
"""

import argparse
import csv
import pathlib
import sys

from finite_cooling.cli import main as cli_main

PROTOCOLS = "tl,rw,ssp,goe-eig,goe-spacing,goe-cumulative"
NS = "10,20,50,100,200,500,1000"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", default="20240")
    ap.add_argument("--m", default="500")
    ap.add_argument("--out", default="results/benchmark.csv")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    code = cli_main(["sweep", "--beta", "1e-8", "--beta-f", "10", "-N", NS, "--m", args.m,
                     "--seed", args.seed, "--protocol", PROTOCOLS, "-o", str(out)])
    if code:
        sys.exit(code)
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    Ns = sorted({int(r["N"]) for r in rows})
    table = {(r["protocol"], int(r["N"])): float(r["dissipation_nats"]) for r in rows}
    print("protocol".ljust(16) + "".join(f"{N:>12d}" for N in Ns))
    for p in PROTOCOLS.split(","):
        print(p.ljust(16) + "".join(f"{table[p, N]:12.4e}" for N in Ns))
    print(f"\nwrote {out}")


if __name__ == "__main__":
    main()
