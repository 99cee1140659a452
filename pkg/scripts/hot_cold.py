"""Rank the four sizing methods for hot and cold caches and find the crossover."""
import argparse

import numpy as np

from sram_pad.report import text_table
from sram_pad.techmodel import load_technology
from sram_pad.workload import MemoryConfig, evaluate_scenario, load_workload, scenario_rows, sweep_idle_fraction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tech", default="ptm32")
    ap.add_argument("--threads", type=int, default=0)
    args = ap.parse_args()
    tech = load_technology(args.tech)
    mem = MemoryConfig(tech, vdd_active=tech.table_vdd)
    for name in ("hot", "cold"):
        w = load_workload(name)
        res = evaluate_scenario(mem, w, threads=args.threads)
        print(f"# {name} (idle {w.idle_fraction:g}): winner {res.winner.value}")
        print(text_table(["method", "power_uw", "area_um2", "delay_ps", "pad", "rank"], scenario_rows(res)))
    sweep = sweep_idle_fraction(mem, load_workload("default"), np.linspace(0, 1, 201), threads=args.threads)
    for lo, hi, a, b in sweep.crossovers:
        print(f"crossover in ({lo:.3f}, {hi:.3f}]: {a.value} -> {b.value}")


if __name__ == "__main__":
    main()
