"""Fit d_j ~ K |alpha_j - alpha_{j+1}|^gamma for several windows of convergents, chiral and AMO."""

import argparse

from harperlab.fractal import continuity_fit
from harperlab.model import amo, chiral_amo

WINDOWS = [(6, 12), (6, 11), (7, 12), (4, 15), (8, 14)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", default="golden")
    args = ap.parse_args()

    for fam in (chiral_amo(), amo(1)):
        for lo, hi in WINDOWS:
            fit = continuity_fit(fam, args.alpha, range(lo, hi + 1))
            print(f"{fam.name:<10} j={lo}..{hi}: gamma = {fit.gamma:.3f}, K = {fit.K:.3g}")
    fit = continuity_fit(chiral_amo(), args.alpha, range(6, 13))
    print(f"\n{'j':>3} {'q_j':>6} {'q_j+1':>6} {'|dalpha|':>10} {'d_j':>10}")
    for j, q0, q1, da, d in fit.rows:
        print(f"{j:>3} {q0:>6} {q1:>6} {da:>10.3e} {d:>10.3e}")
    print(fit.note)


if __name__ == "__main__":
    main()
