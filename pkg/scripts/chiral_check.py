"""Isospectrality and IDS equality between the AMO at 2p/q and the chiral model at p/q."""

import argparse
from fractions import Fraction

import numpy as np

from harperlab.gauge import ids_equality_check, isospectral_check, verify_all


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fracs", default="1/3,1/4,2/5,3/8,5/13,8/21")
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()

    summary = verify_all(20, 20, ("symbolic", Fraction(1, 3), Fraction(2, 5), Fraction(5, 8)))
    for name, status, passed, failed, skipped in summary.rows():
        print(f"{name:<28} {status} passed={passed} failed={failed} skipped={skipped}")
    grid = np.linspace(-4.2, 4.2, 200)
    for text in args.fracs.split(","):
        f = Fraction(text)
        rep = isospectral_check(f, args.tol)
        dev = ids_equality_check(f, grid).deviation
        print(f"{f}: AMO at {rep.doubled}, Hausdorff distance {rep.distance:.2e}, IDS sup deviation {dev:.2e}")


if __name__ == "__main__":
    main()
