#!/usr/bin/env python3
"""Filter-scale sweep: distance to the unfiltered solution as alpha -> 0."""

import argparse

from bardina_strip.verification import alpha_sweep_study


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--alphas", default="0.4,0.2,0.1,0.05")
    parser.add_argument("--nx", type=int, default=64)
    parser.add_argument("--ny", type=int, default=65)
    parser.add_argument("--t-end", type=float, default=1.0)
    args = parser.parse_args()
    alphas = tuple(float(x) for x in args.alphas.split(","))

    alphas, diffs, slope = alpha_sweep_study(alphas=alphas, nx=args.nx,
                                             ny=args.ny, t_end=args.t_end)
    print("alpha    |v_alpha(T) - v_0(T)|")
    for a, d in zip(alphas, diffs):
        print(f"{a:<8g} {d:.6e}")
    print(f"log-log slope: {slope:.4f}")


if __name__ == "__main__":
    main()
