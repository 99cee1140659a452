"""Best plan of each assignment type on both nodes, with relative PAD reduction."""
import argparse

from sram_pad.arraymodel import WorkloadProfile
from sram_pad.optimizer import OptimizerConfig, optimize_table
from sram_pad.report import text_table
from sram_pad.techmodel import load_technology


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--techs", nargs="+", default=["ptm32", "ptm90"])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--threads", type=int, default=0)
    args = ap.parse_args()
    for name in args.techs:
        tech = load_technology(name)
        vdd = tech.table_vdd
        cfg = OptimizerConfig(args.n, WorkloadProfile(200.0, 1000.0, 0.5, vdd), vdd=vdd)
        rows = [r.table_row() + (r.plan.to_text(),) for r in optimize_table(cfg, tech, threads=args.threads)]
        print(f"# {name}, N={args.n}, vdd={vdd} V")
        print(text_table(["assignment", "counts", "reduction_pct", "plan"], rows))


if __name__ == "__main__":
    main()
