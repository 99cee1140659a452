"""Closed-form PAD(n) for a family of up-size steps, as CSV on stdout."""
import argparse
import sys

import numpy as np

from sram_pad.arraymodel import WorkloadProfile
from sram_pad.optimizer import pad_curve
from sram_pad.report import csv_text
from sram_pad.techmodel import load_technology


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tech", default="ptm32")
    ap.add_argument("--n", type=int, default=256)
    args = ap.parse_args()
    tech = load_technology(args.tech)
    w = WorkloadProfile(200.0, 1000.0, 0.5, tech.table_vdd)
    xs = np.round(np.arange(1, 11) * 0.05, 12)
    rows = pad_curve(tech, w, xs, vdd=tech.table_vdd, n_cells=args.n)
    sys.stdout.write(csv_text(["x_over_w", "n", "pad", "pad_rel"], rows))
    # summary: location and depth of each curve's minimum
    for xf in xs:
        sub = [r for r in rows if r[0] == xf]
        best = min(sub, key=lambda r: r[2])
        print(f"# x={xf:.2f}W  n*={best[1]}  improvement={100 * (1 - best[3]):.2f}%", file=sys.stderr)


if __name__ == "__main__":
    main()
