"""Write the kernel figure: K(x) with its sign change marked.

K is negative everywhere except a short stretch left of x0 ~ -1.153, so
on average a unit's dead-probability rises step over step; the figure
makes the smallness of the positive window visible.
"""

import argparse
import sys

import numpy as np

from collapse_lab.analytic import k_fn, k_sign_change
from collapse_lab.svgplot import Series, line_plot


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="k_fn.svg")
    ap.add_argument("--lo", type=float, default=-4.0)
    ap.add_argument("--hi", type=float, default=4.0)
    ap.add_argument("--points", type=int, default=801)
    args = ap.parse_args()

    xs = np.linspace(args.lo, args.hi, args.points)
    ks = k_fn(xs)
    x0 = k_sign_change()
    series = [
        Series("K(x)", tuple(xs.tolist()), tuple(ks.tolist())),
        Series(f"sign change x0={x0:.4f}", (x0, x0), (float(ks.min()), float(ks.max()))),
    ]
    svg = line_plot(series, title="Drift kernel", xlabel="x", ylabel="K(x)")
    with open(args.out, "w") as fh:
        fh.write(svg)
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
