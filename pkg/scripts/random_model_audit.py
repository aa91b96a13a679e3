"""Cross-check the level-shift pipeline against the Pauli master equation on random models.

For each model: spectral certificate, bridge identity, population agreement,
zero total flow and entropy-production sign.  Prints one summary line per
check and exits nonzero if any check fails.
"""
import argparse
import math
import sys

import numpy as np

from nesskit.dynamics import build_generator, stationary_distribution, stationary_flux
from nesskit.fixtures import random_model
from nesskit.levelshift import assemble_lambda_zero, spectral_certificate
from nesskit.ness import solve_ness
from nesskit.thermo import eta_prime


def audit(p, rs):
    rm = build_generator(p, rs)
    L = assemble_lambda_zero(p, rs, 0.0)
    sol = solve_ness(p, rs)
    e1, e2 = (eta_prime(p, rs, j, sol.gamma) for j in (1, 2))
    b1, b2 = rs[0].beta, rs[1].beta
    return {
        "certificate": float(spectral_certificate(L).passed),
        "bridge": np.abs(rm.M + (L / 1j).real.T).max() / max(1.0, np.abs(rm.M).max()),
        "populations": np.abs(stationary_distribution(rm) - sol.populations).max(),
        "flow_sum": abs(e1 + e2) / (abs(e1) + abs(e2) + 1),
        "flux_oracle": abs(stationary_flux(rm, sol.populations, 1) - e1) / (1 + abs(e1)),
        "ep_min": (b1 - b2) * e1,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--models", type=int, default=500)
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    results = [audit(*random_model(rng, n_max=args.n_max)) for _ in range(args.models)]
    limits = {"bridge": 1e-12, "populations": 1e-10, "flow_sum": 1e-10, "flux_oracle": 1e-12}
    failed = False
    certs = sum(r["certificate"] for r in results)
    print(f"certificate   {int(certs)}/{len(results)} passed")
    failed |= certs != len(results)
    for key, tol in limits.items():
        worst = max(r[key] for r in results)
        print(f"{key:13s} worst {worst:.2e} (limit {tol:g})")
        failed |= worst > tol
    ep = min(r["ep_min"] for r in results)
    print(f"{'ep_min':13s} {ep:.2e} (limit -1e-12)")
    failed |= ep < -1e-12
    return 1 if failed or math.isnan(ep) else 0


if __name__ == "__main__":
    sys.exit(main())
