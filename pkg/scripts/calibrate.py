"""Try parameter overrides on a technology preset and report the calibration targets.

Example:
    python3 scripts/calibrate.py ptm90 '{"vth": {"Low": {"n": 0.32, "p": 0.32}}}'
"""
import argparse
import json
from dataclasses import replace

from sram_pad.arraymodel import WorkloadProfile
from sram_pad.cellmodel import preset_cell, raw_intrinsic_delay, raw_leakage_power, upsize
from sram_pad.optimizer import OptimizerConfig, optimize_table
from sram_pad.techmodel import PRESET_DIR, _parse_sizings, read_yaml, technology_from_dict

# reductions the table rows should be ordered by, largest first
TARGET_ORDER = ["(1H,2H,3L)", "(1H,2L,0)", "(1H,1L,0)", "(1H,2H,3H)", "(1H,2H,0)"]
TARGET_ORDER_32 = ["(1H,2H,3L)", "(1H,2L,0)", "(1H,2H,3H)", "(1H,2H,0)", "(1H,1L,0)"]


def merge(base: dict, over: dict) -> dict:
    for k, v in over.items():
        if isinstance(v, dict):
            merge(base.setdefault(k, {}), v)
        else:
            base[k] = v
    return base


def build(name: str, overrides: dict):
    data = merge(read_yaml(PRESET_DIR / f"{name}.yaml"), overrides)
    tech = technology_from_dict(data)
    sizings = _parse_sizings(name, read_yaml(PRESET_DIR / "cells.yaml")[name])
    return replace(tech, cell_sizings=sizings)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("tech")
    ap.add_argument("overrides", nargs="?", default="{}", help="JSON merged into the preset")
    args = ap.parse_args()
    tech = build(args.tech, json.loads(args.overrides))
    vdd = tech.table_vdd
    w = WorkloadProfile(200.0, 1000.0, 0.5, vdd)
    cell = preset_cell("Conventional", tech)
    d1 = raw_intrinsic_delay(cell, vdd)
    wire = tech.k_wl * (256 * tech.layout_w) ** 2
    print(f"d1={d1:.4g} ps  wordline share={wire / (wire + d1):.3f}")
    print(f"low/high delay={raw_intrinsic_delay(cell.with_vth('Low'), vdd) / d1:.3f}  "
          f"2x-width delay={raw_intrinsic_delay(upsize(cell, tech.layout_w), vdd) / d1:.3f}")
    leak = 256 * raw_leakage_power(cell, vdd)
    print(f"leakage share of row power={leak / (w.dynamic_power() + leak):.4f}  "
          f"low/high leakage={raw_leakage_power(cell.with_vth('Low'), vdd) / raw_leakage_power(cell, vdd):.2f}")
    rows = {r.plan.label: r for r in optimize_table(OptimizerConfig(256, w, vdd=vdd), tech)}
    for label, r in rows.items():
        print(f"{label:12s} {r.reduction_pct:7.3f}%  {r.plan.to_text()}")
    target = TARGET_ORDER_32 if args.tech == "ptm32" else TARGET_ORDER
    got = [rows[t].reduction_pct for t in target]
    ok = all(a > b for a, b in zip(got, got[1:]))
    print("ranking", "matches" if ok else "does NOT match", " > ".join(target))


if __name__ == "__main__":
    main()
