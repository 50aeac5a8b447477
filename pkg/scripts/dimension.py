"""Cover sums and box-counting slope for the critical AMO along convergents of alpha."""

import argparse

from harperlab.contfrac import NAMED, CFExpansion
from harperlab.fractal import dim_upper_estimate, hausdorff_sum
from harperlab.model import amo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", default="golden")
    ap.add_argument("--qmax", type=int, default=610)
    ap.add_argument("--C", type=float, default=2.0)
    args = ap.parse_args()

    alpha = NAMED.get(args.alpha) or CFExpansion.from_real(args.alpha)
    est = dim_upper_estimate(amo(1), alpha, q_max=args.qmax, C=args.C)
    print("q      " + " ".join(f"t={t:<6g}" for t in est.t_grid))
    for q, row in zip(est.q_list, est.sums):
        print(f"{q:<6} " + " ".join(f"{v:<8.4f}" for v in row))
    for cv in est.covers:
        for t in est.t_grid:
            hausdorff_sum(cv, t)  # asserts the Holder bound
    print(f"t* = {est.t_star}, box slope = {est.box_slope:.4f} (Holder bound checked on every cover)")


if __name__ == "__main__":
    main()
