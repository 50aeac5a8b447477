"""q|sigma| along golden-mean convergents against 32 Catalan / pi, and Aubry-Andre measures off criticality."""

import argparse

from harperlab.fractal import THOULESS_C, aubry_andre_check, thouless_scaling_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", default="golden")
    ap.add_argument("--nmax", type=int, default=16)
    args = ap.parse_args()

    tab = thouless_scaling_table(args.alpha, args.nmax)
    print(f"{'n':>3} {'q':>6} {'measure':>14} {'q*measure':>12} {'rel.err':>10}")
    for r, err in zip(tab.rows, tab.relative_error()):
        print(f"{r.n:>3} {r.q:>6} {r.measure:>14.9f} {r.q_measure:>12.6f} {err:>10.2e}")
    print(f"reference {THOULESS_C:.6f}; same-parity trend toward it: {tab.trend_toward_reference()}")

    for lam in (0.5, 2.0):
        aa = aubry_andre_check(lam, args.alpha, min(args.nmax, 13))
        print(f"lambda={lam}: target {aa.target}, final q={aa.rows[-1][0]} rel dev {aa.final_relative():.2e}, "
              f"decreasing {aa.decreasing()}")


if __name__ == "__main__":
    main()
