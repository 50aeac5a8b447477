"""Butterfly dataset and SVG for the critical AMO (or another model) up to q_max."""

import argparse
import json
from pathlib import Path

from harperlab.model import parse_model
from harperlab.spectral import butterfly
from harperlab.svg import butterfly_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="amo:1")
    ap.add_argument("--qmax", type=int, default=40)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/butterfly")
    args = ap.parse_args()

    fam = parse_model(args.model)
    entries = butterfly(fam, args.qmax, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "butterfly.jsonl", "w") as fh:
        for e in entries:
            fh.write(json.dumps({"p": e.frac.numerator, "q": e.frac.denominator,
                                 "bands": None if e.bands is None else e.bands.to_list(), "error": e.error}) + "\n")
    rows = [(float(e.frac), list(e.bands)) for e in entries if e.bands is not None]
    (out / "butterfly.svg").write_text(butterfly_svg(rows, f"{fam.name}, q <= {args.qmax}", reproducible=True))
    worst = max(e.frac.denominator * e.bands.measure for e in entries if e.bands is not None)
    print(f"{len(entries)} fractions, max q|sigma| = {worst:.6f}, written to {out}")


if __name__ == "__main__":
    main()
