"""Tabulate numeric m_k against every applicable bound over a (law, rho, k) grid.

Writes long-form CSV: law, rho, k, m, bound source, direction, value, slack.
Slack is measured on the permitted side, so it is never negative when the
bound holds.
"""

import argparse
import csv
import sys

from mginf_mrp import bounds as B
from mginf_mrp.dist import parse_spec
from mginf_mrp.renewal import QueueConfig, sojourn_mean

LAWS = [
    "exp:alpha=1.0",
    "det:alpha=1.0",
    "erlang:n=2,alpha=1.0",
    "erlang:n=5,alpha=1.0",
    "hyperexp2:p=0.5,alpha1=0.5,alpha2=1.5",
    "hyperexp2:p=0.1,alpha1=5,alpha2=0.5555555555555556",
    "uniform:a=0,b=2",
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, nargs="+", default=[0.1, 0.25, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--kmax", type=int, default=15)
    ap.add_argument("--out", type=argparse.FileType("w"), default=sys.stdout)
    args = ap.parse_args(argv)

    w = csv.writer(args.out, lineterminator="\n")
    w.writerow(["law", "rho", "k", "m", "source", "direction", "bound", "slack"])
    worst = None
    for spec in LAWS:
        d = parse_spec(spec)
        for rho in args.rho:
            cfg = QueueConfig(rho / d.mean, d)
            for k in range(1, args.kmax + 1):
                m = sojourn_mean(cfg, k).m
                for b in [B.regime_bound(cfg, k), *B.class_bounds(cfg, k)]:
                    if not b.applicable:
                        continue
                    slack = b.value - m if b.direction is B.Direction.UPPER else m - b.value
                    w.writerow([spec, rho, k, f"{m:.12g}", b.source.value, b.direction.value, f"{b.value:.12g}", f"{slack:.3e}"])
                    if worst is None or slack < worst[0]:
                        worst = (slack, spec, rho, k, b.source.value)
    print(f"smallest slack {worst[0]:.3e} at {worst[1:]}", file=sys.stderr)


if __name__ == "__main__":
    main()
