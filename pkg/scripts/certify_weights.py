#!/usr/bin/env python3
"""Print the weight-derivative certification tables across cutoff radii.

For each exponent the table lists the empirical constants in
``|d^beta psi^2| <= C eps^|beta| psi`` (strong) and ``... <= C eps^|beta|
psi^2`` (weak) per multi-index.  At the threshold exponent the weak form is
radius-stable for every index while the strong form grows like ``rho^(1/3)``
for the pure-x1 second derivative; above the threshold the strong constants
grow across the board.
"""

import argparse

from bardina_strip.verification import weight_rho_stability
from bardina_strip.weights import lemma_beta_set


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--rhos", default="1,10,100")
    parser.add_argument("--gammas", default="0.6666666666666666,1.0")
    args = parser.parse_args()
    rhos = [float(x) for x in args.rhos.split(",")]

    for gamma in (float(x) for x in args.gammas.split(",")):
        print(f"=== gamma = {gamma:.4f}, epsilon = {args.epsilon}")
        reports = weight_rho_stability(epsilon=args.epsilon, gamma=gamma,
                                       rhos=rhos)
        header = "beta      " + "".join(f"  C_s(rho={r:g})" for r in rhos) \
            + "".join(f"  C_w(rho={r:g})" for r in rhos)
        print(header)
        for beta in lemma_beta_set():
            row = f"{str(beta):10}"
            row += "".join(f"  {reports[r].c_strong[beta]:12.4f}" for r in rhos)
            row += "".join(f"  {reports[r].c_weak[beta]:12.4f}" for r in rhos)
            print(row)
        aggs = [reports[r].aggregate_strong for r in rhos]
        print("aggregate strong:", "  ".join(f"{a:.4f}" for a in aggs))
        print()


if __name__ == "__main__":
    main()
