"""Heat flux and entropy production of the two-level fixture across a temperature sweep.

Writes a plot-ready CSV (delta_beta, gamma_1, gamma_2, eta_prime_1, ep/g^2,
linear-response prediction) to stdout or to ``--out``.
"""
import argparse
import csv
import sys

import numpy as np

from nesskit.fixtures import two_level_fixture
from nesskit.thermo import linear_response, sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta1", type=float, default=1.0)
    ap.add_argument("--span", type=float, default=0.9, help="max |delta_beta| as a fraction of beta1")
    ap.add_argument("--points", type=int, default=37)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    p, rs = two_level_fixture(args.beta1, args.beta1)
    grid = args.beta1 * np.linspace(-args.span, args.span, args.points)
    rows = sweep(p, rs, grid, g=1.0)
    L = linear_response(p, args.beta1, rs).value

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["delta_beta", "gamma_1", "gamma_2", "eta_prime_1", "ep_per_g2", "linear_prediction"])
    for r in rows:
        w.writerow([f"{v:.17g}" for v in (r.delta_beta, *r.gamma, r.eta_prime_1, r.ep_leading,
                                          L * r.delta_beta)])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
