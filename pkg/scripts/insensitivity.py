"""Simulate the true M/G/inf queue for several laws of equal mean and print
per-state estimates next to the insensitive values and the approximation.

The true queue has m_k = alpha/(k+rho) and v_k = rho^{k-1}(k+rho)/k! for any
service law; the Markov renewal approximation does not.
"""

import argparse
import math

from mginf_mrp.renewal import entries_mean
from mginf_mrp.sim import config_for, run

LAWS = ["exp:alpha=1.0", "det:alpha=1.0", "erlang:n=2,alpha=1.0", "hyperexp2:p=0.5,alpha1=0.5,alpha2=1.5", "uniform:a=0,b=2"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, default=1.0)
    ap.add_argument("--cycles", type=int, default=200_000)
    ap.add_argument("--kmax", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    rho = args.rho
    print(f"rho = {rho}, {args.cycles} cycles per law, alpha = 1")
    print(f"{'law':40s} {'k':>2s} {'sim m_k':>18s} {'alpha/(k+rho)':>13s} {'approx m_k':>10s} {'sim v_k':>18s} {'true v_k':>9s} {'approx v_k':>10s}")
    for spec in LAWS:
        sc = config_for(rho, spec, cycles=args.cycles, k_max=args.kmax, seed=args.seed)
        r = run(sc)
        cm = entries_mean(sc.queue, args.kmax)
        for k in range(1, args.kmax + 1):
            s, v = r.sojourn_mean[k], r.entries_per_cycle[k]
            true_v = rho ** (k - 1) * (k + rho) / math.factorial(k)
            print(
                f"{spec:40s} {k:2d} {s.estimate:9.5f}+-{s.standard_error:.5f} {1 / (k + rho):13.5f} {cm.m[k]:10.5f}"
                f" {v.estimate:9.5f}+-{v.standard_error:.5f} {true_v:9.5f} {cm.v[k]:10.5f}"
            )
        bc = r.busy_cycle_mean
        print(f"{spec:40s} busy cycle {bc.estimate:.5f}+-{bc.standard_error:.5f}  e^rho/lam = {math.exp(rho) / rho:.5f}  approx {cm.mu0:.5f}")


if __name__ == "__main__":
    main()
