"""Monte Carlo decay of the winning plan's PAD reduction under V_th and width spread."""
import argparse

from sram_pad.arraymodel import WorkloadProfile
from sram_pad.optimizer import OptimizerConfig, optimize, variation_analysis
from sram_pad.techmodel import load_technology


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tech", default="ptm32")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0, 2.5, 5, 10, 15])
    args = ap.parse_args()
    tech = load_technology(args.tech)
    vdd = tech.table_vdd
    res = optimize(OptimizerConfig(256, WorkloadProfile(200.0, 1000.0, 0.5, vdd), vdd=vdd), tech)
    print(f"plan {res.plan.to_text()}  nominal {res.reduction_pct:.2f}%")
    for s in args.sigmas:
        v = variation_analysis(res, s, args.trials, args.seed)
        print(f"sigma {s:5.1f}%  mean {v.mean_pct:6.2f}%  min {v.min_pct:7.2f}%  max {v.max_pct:6.2f}%")


if __name__ == "__main__":
    main()
