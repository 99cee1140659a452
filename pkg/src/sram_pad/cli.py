"""sram-pad command line: characterize cells, sweep sizings, optimize rows, compare methods."""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import __version__
from .arraymodel import WorkloadProfile
from .cellmodel import MethodTag, characterize_presets, preset_cell
from .errors import (
    ConfigError,
    InfeasibleDesignError,
    InoperableVoltageError,
    InvalidParameterError,
    SramPadError,
    UnsupportedTechnologyError,
)
from .noisemargin import Metric, SweepGrid, drv, hold_snm, retention_minimum, sizing_sweep, sweep_rows
from .optimizer import (
    TABLE_PATTERNS,
    ConstraintMode,
    OptimizerConfig,
    PowerMode,
    optimize,
    optimize_table,
    pad_curve,
    variation_analysis,
)
from .report import csv_text, text_table, write_atomic
from .techmodel import VthClass, load_technology
from .workload import MemoryConfig, evaluate_scenario, load_workload, scenario_rows, sweep_idle_fraction, with_idle

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INFEASIBLE = 4

EPILOG = """\
exit status:
  0  success
  1  other error (numerical failure, undefined metric, ...)
  2  bad or missing flag
  3  missing or invalid configuration (technology, workload, config dir)
  4  infeasible design (no feasible plan, supply below retention level)

config files are searched in --config-dir, then $SRAM_PAD_CONFIG_DIR,
then the built-in presets.
"""


def parse_range(text: str) -> list:
    """``start:step:stop`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            k = int(np.floor((stop - start) / step + 1e-9))
            return [round(start + i * step, 12) for i in range(k + 1)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:step:stop or a,b,c") from None


def _add_common(p, tech=True):
    if tech:
        p.add_argument("--tech", default="ptm32", help="technology preset name or YAML path (default ptm32)")
    p.add_argument("--config-dir", default=None, help="directory searched first for YAML configs")
    p.add_argument("--out", default=None, help="write CSV here (atomically) instead of a text table")
    p.add_argument("--csv", action="store_true", help="print CSV to stdout instead of a text table")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto (default 1)")


def _add_row(p):
    p.add_argument("--n", type=int, default=256, help="cells per wordline row (default 256)")
    p.add_argument("--vdd", type=float, default=None, help="active supply in V (default: technology table supply)")
    p.add_argument("--mirrored", action="store_true", help="row driven from both ends")
    p.add_argument("--method", default="Conventional", choices=[m.value for m in MethodTag],
                   help="base cell sizing method")
    p.add_argument("--workload", default="default", help="workload profile name from workloads.yaml")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sram-pad",
        description="Hybrid multi-size, dual-V_th SRAM row assignment and PAD analysis.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("characterize", help="delay, leakage, wordline load and DRV of each preset cell",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--vdd", type=float, default=None, help="supply in V (default: technology table supply)")

    p = sub.add_parser("snm-sweep", help="metric over (W, L) of one transistor pair",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--pair", default="m12", choices=["m12", "m34", "m56"])
    p.add_argument("--w", type=parse_range, default=parse_range("1:0.5:4"), help="widths in l_min (default 1:0.5:4)")
    p.add_argument("--l", type=parse_range, default=parse_range("1:0.5:4"), help="lengths in l_min (default 1:0.5:4)")
    p.add_argument("--metric", default="hold", choices=["hold", "read", "write"])
    p.add_argument("--vdd", type=float, default=None, help="sweep supply in V (default: pinned sweep supply)")
    p.add_argument("--method", default="DrvBased", choices=[m.value for m in MethodTag],
                   help="preset supplying the other transistors")

    p = sub.add_parser("drv", help="data retention voltage of each preset",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--snm-min", type=float, default=None, help="required hold SNM in V (default from technology)")
    p.add_argument("--method", default=None, choices=[m.value for m in MethodTag], help="one preset only")

    p = sub.add_parser("optimize", help="greedy hybrid assignment of one row",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    _add_row(p)
    p.add_argument("--sizes", type=int, default=3, choices=[1, 2, 3], help="size versions allowed (default 3)")
    p.add_argument("--vth", default="dual", choices=["single", "dual"])
    p.add_argument("--constraint", default="ddiff", choices=["ddiff", "none"])
    p.add_argument("--x-step", type=float, default=0.05, help="up-size grid step as a fraction of W")
    p.add_argument("--x-max", type=float, default=1.0, help="largest up-size as a fraction of W")
    p.add_argument("--power-mode", default="per-plan", choices=[m.value for m in PowerMode])
    p.add_argument("--table", action="store_true", help="one row per assignment type, best of each")
    p.add_argument("--trace", action="store_true", help="print greedy decisions to stderr")
    p.add_argument("--variation", type=int, default=0, metavar="TRIALS",
                   help="Monte Carlo trials of the result under process variation")
    p.add_argument("--sigma", type=float, default=10.0, help="variation half-width in percent (default 10)")
    p.add_argument("--seed", type=int, default=0, help="random seed for --variation (default 0)")

    p = sub.add_parser("compare", help="rank the four sizing methods by memory PAD",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--workload", default="default", help="workload profile name from workloads.yaml")
    p.add_argument("--idle", type=float, default=None, help="override the profile's idle fraction")
    p.add_argument("--idle-grid", type=parse_range, default=None,
                   help="sweep idle fraction, e.g. 0:0.05:1, and report winner changes")
    p.add_argument("--capacity", type=int, default=32768, help="memory size in bits (default 32768)")
    p.add_argument("--n", type=int, default=256, help="cells per row (default 256)")
    p.add_argument("--vdd", type=float, default=None, help="active supply in V (default: technology table supply)")

    p = sub.add_parser("pad-curve", help="closed-form PAD against the number of up-sized cells",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(p)
    p.add_argument("--x", type=parse_range, default=parse_range("0.05:0.05:0.5"),
                   help="up-size as fractions of W (default 0.05:0.05:0.5)")
    p.add_argument("--n", type=int, default=256, help="cells per row (default 256)")
    p.add_argument("--n-step", type=int, default=1, help="stride over the up-sized count (default 1)")
    p.add_argument("--vdd", type=float, default=None, help="supply in V (default: technology table supply)")
    p.add_argument("--workload", default="default", help="workload profile name from workloads.yaml")
    return parser


# --------------------------------------------------------------------------

def _emit(args, header, rows):
    rows = list(rows)
    out = sys.stdout
    if args.out:
        write_atomic(args.out, csv_text(header, rows))
    elif args.csv:
        out.write(csv_text(header, rows))
    else:
        out.write(text_table(header, rows))


def _workload(args, tech, vdd):
    w = load_workload(args.workload, args.config_dir)
    return replace(w, vdd=vdd)


def cmd_characterize(args, tech):
    rows = characterize_presets(tech, args.vdd)
    header = ["method", "vth", "vdd", "delay_ps", "leakage_uw", "wordline_load_ff", "drv_v"]
    _emit(args, header, ([r[h] for h in header] for r in rows))


def cmd_snm_sweep(args, tech):
    metric = {"hold": Metric.HOLD_SNM, "read": Metric.READ_SNM, "write": Metric.WRITE_MARGIN}[args.metric]
    grid = SweepGrid(tuple(args.w), tuple(args.l), metric, args.pair)
    res = sizing_sweep(grid, tech, args.vdd, MethodTag(args.method), args.threads)
    _emit(args, ["w", "l", f"{metric.value}_v"], sweep_rows(res))
    if res.best is not None:
        print(f"best w={res.best[0]:g} l={res.best[1]:g} {metric.value}={res.best_value:.6g} V", file=sys.stderr)


def cmd_drv(args, tech):
    methods = [MethodTag(args.method)] if args.method else [m for m in MethodTag if m.value in tech.cell_sizings]
    rows = []
    for m in methods:
        cell = preset_cell(m, tech)
        v_star = retention_minimum(cell, args.snm_min)
        level = drv(cell, tech, args.snm_min)
        rows.append((m.value, v_star, level, hold_snm(cell, level)))
    _emit(args, ["method", "v_star_v", "drv_v", "hold_snm_at_drv_v"], rows)


def _opt_config(args, tech) -> OptimizerConfig:
    vdd = tech.table_vdd if args.vdd is None else args.vdd
    return OptimizerConfig(
        n_cells=args.n,
        workload=_workload(args, tech, vdd),
        max_sizes=args.sizes,
        vth_set=frozenset({VthClass.HIGH} if args.vth == "single" else {VthClass.HIGH, VthClass.LOW}),
        x_step=args.x_step,
        x_max=args.x_max,
        vdd=vdd,
        mirrored=args.mirrored,
        constraint_mode=ConstraintMode.DDIFF if args.constraint == "ddiff" else ConstraintMode.NONE,
        power_mode=PowerMode(args.power_mode),
        method=MethodTag(args.method),
    )


OPT_HEADER = ["assignment", "counts", "reduction_pct", "pad", "power_uw", "area_um2", "delay_ps",
              "critical_cell", "plan"]


def _opt_row(res):
    label, counts, red = res.table_row()
    bd = res.breakdown
    return (label, counts, red, bd.pad, bd.power, bd.area, bd.delay, bd.critical_cell_index, res.plan.to_text())


def cmd_optimize(args, tech):
    cfg = _opt_config(args, tech)
    if args.table:
        patterns = [p for p in TABLE_PATTERNS if args.vth == "dual" or "L" not in p]
        results = optimize_table(cfg, tech, patterns, args.threads)
    else:
        results = [optimize(cfg, tech)]
    if args.trace:
        for res in results:
            for rec in res.trace:
                print(rec.line(), file=sys.stderr)
    header, rows = list(OPT_HEADER), [_opt_row(r) for r in results]
    if args.variation:
        header += ["var_mean_pct", "var_min_pct", "var_max_pct", "var_trials", "var_seed"]
        for i, res in enumerate(results):
            s = variation_analysis(res, args.sigma, args.variation, args.seed)
            rows[i] = rows[i] + (s.mean_pct, s.min_pct, s.max_pct, s.trials, s.seed)
    _emit(args, header, rows)
    if not args.table and results[0].infeasible:
        raise InfeasibleDesignError("no plan satisfies the delay constraint; reported the all-nominal row")


def cmd_compare(args, tech):
    vdd = tech.table_vdd if args.vdd is None else args.vdd
    mem = MemoryConfig(tech, args.capacity, args.n, vdd)
    w = _workload(args, tech, vdd)
    if args.idle is not None:
        w = with_idle(w, args.idle)
    if args.idle_grid is not None:
        sweep = sweep_idle_fraction(mem, w, args.idle_grid, threads=args.threads)
        _emit(args, ["idle_fraction", "winner"], ((g, m.value) for g, m in zip(sweep.grid, sweep.winners)))
        for lo, hi, a, b in sweep.crossovers:
            print(f"crossover between idle {lo:g} and {hi:g}: {a.value} -> {b.value}", file=sys.stderr)
        return
    res = evaluate_scenario(mem, w, threads=args.threads)
    _emit(args, ["method", "power_uw", "area_um2", "delay_ps", "pad", "rank"], scenario_rows(res))


def cmd_pad_curve(args, tech):
    vdd = tech.table_vdd if args.vdd is None else args.vdd
    if args.n_step < 1:
        raise InvalidParameterError("--n-step must be at least 1")
    w = _workload(args, tech, vdd)
    rows = pad_curve(tech, w, args.x, range(0, args.n + 1, args.n_step), vdd, n_cells=args.n)
    _emit(args, ["x_over_w", "n", "pad", "pad_rel"], rows)


COMMANDS = {
    "characterize": cmd_characterize,
    "snm-sweep": cmd_snm_sweep,
    "drv": cmd_drv,
    "optimize": cmd_optimize,
    "compare": cmd_compare,
    "pad-curve": cmd_pad_curve,
}


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.threads < 0:
        print("sram-pad: error: --threads must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        tech = load_technology(args.tech, args.config_dir)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            COMMANDS[args.command](args, tech)
    except (ConfigError, UnsupportedTechnologyError, FileNotFoundError) as exc:
        print(f"sram-pad: config error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleDesignError, InoperableVoltageError) as exc:
        print(f"sram-pad: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvalidParameterError as exc:
        print(f"sram-pad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SramPadError, OSError) as exc:
        print(f"sram-pad: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
