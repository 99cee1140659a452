"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line that is printed in the terminal
summary. Criteria that the shipped model does not meet fail here on
purpose; they are not relaxed.
"""
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from sram_pad.arraymodel import WorkloadProfile, d_diff
from sram_pad.cellmodel import MethodTag, preset_cell
from sram_pad.noisemargin import SweepGrid, butterfly, drv, hold_snm, retention_minimum, sizing_sweep
from sram_pad.optimizer import (
    ConstraintMode,
    OptimizerConfig,
    brute_force_oracle,
    optimize,
    optimize_table,
    pad_closed_form,
    pad_curve,
    variation_analysis,
)
from sram_pad.techmodel import VthClass
from sram_pad.workload import MemoryConfig, evaluate_scenario, sweep_idle_fraction, with_idle

H, L = VthClass.HIGH, VthClass.LOW
ORDER_32 = ["(1H,2H,3L)", "(1H,2L,0)", "(1H,2H,3H)", "(1H,2H,0)", "(1H,1L,0)"]  # 34 > 16 > 14 > 7 > 4
ORDER_90 = ["(1H,2H,3L)", "(1H,2L,0)", "(1H,1L,0)", "(1H,2H,3H)", "(1H,2H,0)"]  # 40 > 28 > 27 > 12 > 6


def _row_config(tech, n=256, **kw):
    vdd = tech.table_vdd
    return OptimizerConfig(n, WorkloadProfile(200.0, 1000.0, 0.5, vdd), vdd=vdd, **kw)


def _strict(values):
    return all(a > b for a, b in zip(values, values[1:]))


def test_criterion_1_closed_form_identity(record):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        N = int(rng.integers(1, 1025))
        args = dict(W=rng.uniform(0.05, 5), H=rng.uniform(0.05, 5), N=N, n=int(rng.integers(0, N + 1)),
                    x=rng.uniform(0, 5), p=rng.uniform(1e-3, 1e3), K=rng.uniform(1e-5, 1e-1),
                    d1=rng.uniform(1e-1, 1e4))
        f, e = pad_closed_form(**args)
        worst = max(worst, abs(f - e) / abs(f))
    dt = time.perf_counter() - t0
    ok = record(1, worst <= 1e-12 and dt < 1.0, f"max rel diff {worst:.2e}, {dt:.3f} s")
    assert ok


def test_criterion_2_curve_shape(record, tech32):
    t0 = time.perf_counter()
    consts = (tech32.layout_w, tech32.layout_h, tech32.k_wl, tech32.table_vdd)
    assert consts == pytest.approx((0.80, 0.32, 0.0014, 0.5))
    w = WorkloadProfile(200.0, 1000.0, 0.5, 0.5)
    xs = np.round(np.arange(1, 11) * 0.05, 12)
    rows = pad_curve(tech32, w, xs, n_cells=256)
    unique_interior = True
    for xf in xs:
        pad = np.array([r[2] for r in rows if r[0] == xf])
        k = int(np.argmin(pad))
        d = np.diff(pad)
        unimodal = np.all(d[:k] < 0) and np.all(d[k:] > 0)
        unique_interior &= bool(0 < k < 256 and unimodal)
    two = optimize(_row_config(tech32, max_sizes=2, vth_set={H}), tech32).reduction_pct
    three = optimize(_row_config(tech32, max_sizes=3, vth_set={H}), tech32).reduction_pct
    dt = time.perf_counter() - t0
    ok = (unique_interior and three > two > 0 and abs(three - 14) <= 5 and abs(two - 7) <= 5 and dt < 10)
    record(2, ok, f"interior minima {unique_interior}, three-size {three:.2f}% (14+-5), "
                  f"two-size {two:.2f}% (7+-5), {dt:.1f} s")
    assert ok


def test_criterion_3_table_reproduction(record, tech32, tech90):
    t0 = time.perf_counter()
    free = optimize(_row_config(tech32), tech32)
    rows32 = {r.plan.label: r for r in optimize_table(_row_config(tech32), tech32)}
    rows90 = {r.plan.label: r for r in optimize_table(_row_config(tech90), tech90)}
    dt = time.perf_counter() - t0
    red32 = [rows32[k].reduction_pct for k in ORDER_32]
    red90 = [rows90[k].reduction_pct for k in ORDER_90]
    label_ok = free.plan.label == "(1H,2H,3L)"
    band_ok = abs(free.reduction_pct - 34) <= 8
    rank32, rank90 = _strict(red32), _strict(red90)
    counts = {k: rows32[k].plan.counts for k in ORDER_32}
    ok = label_ok and band_ok and rank32 and rank90 and dt < 60
    record(3, ok, f"winner {free.plan.label} {free.reduction_pct:.2f}% (34+-8: {band_ok}), "
                  f"32nm ranking {rank32} {[round(v, 2) for v in red32]}, "
                  f"90nm ranking {rank90} {[round(v, 2) for v in red90]}, counts {counts}, {dt:.1f} s")
    assert ok


def test_criterion_4_oracle_equivalence(record, tech32):
    t0 = time.perf_counter()
    exact2, worst3 = True, 0.0
    for n in (8, 16, 32):
        cfg2 = _row_config(tech32, n=n, max_sizes=2, x_step=0.1)
        g, o = optimize(cfg2, tech32), brute_force_oracle(cfg2, tech32)
        exact2 &= g.breakdown.pad == o.breakdown.pad
        cfg3 = _row_config(tech32, n=n, max_sizes=3, x_step=0.1)
        g, o = optimize(cfg3, tech32), brute_force_oracle(cfg3, tech32)
        worst3 = max(worst3, g.breakdown.pad / o.breakdown.pad - 1)
    dt = time.perf_counter() - t0
    ok = exact2 and worst3 <= 0.05 and dt < 120
    record(4, ok, f"two-size exact {exact2}, three-size worst gap {100 * worst3:.3f}%, {dt:.1f} s")
    assert ok


def test_criterion_5_feasibility_invariant(record, tech32):
    rnd = random.Random(2024)
    violations, checked = 0, 0
    for _ in range(500):
        mirrored = rnd.random() < 0.25
        n = rnd.randrange(2, 97)
        if mirrored:
            n += n % 2
        w = WorkloadProfile(rnd.uniform(10, 500), rnd.uniform(200, 5000), rnd.uniform(0.05, 1.0), 0.5,
                            rnd.uniform(0, 1))
        cfg = OptimizerConfig(
            n, w, max_sizes=rnd.choice([2, 3]), vth_set=rnd.choice([{H}, {H, L}]),
            x_step=rnd.choice([0.05, 0.1, 0.2, 0.25]), x_max=rnd.choice([0.5, 1.0]), vdd=0.5,
            mirrored=mirrored, constraint_mode=ConstraintMode.DDIFF,
            method=rnd.choice(list(MethodTag)),
        )
        plan = optimize(cfg, tech32).plan
        if sum(1 for s in plan.segments if s.count) > 1:
            checked += 1
            violations += d_diff(plan, tech32, cfg.vdd) > 0
    ok = violations == 0
    record(5, ok, f"500 configs, {checked} hybrid plans, {violations} with d_diff > 0")
    assert ok


def test_criterion_6_drv_pipeline(record, tech32):
    level = drv(preset_cell(MethodTag.DRV_BASED, tech32), tech32)
    exact = level == pytest.approx(0.194, abs=1e-12)
    converged, monotone = True, True
    grid = np.linspace(tech32.thermal_noise_floor, tech32.vdd_nominal, 50)
    for m in MethodTag:
        cell = preset_cell(m, tech32)
        v = retention_minimum(cell)
        converged &= hold_snm(cell, v) >= tech32.snm_min > hold_snm(cell, v - 0.001)
        snm = np.array([hold_snm(cell, g) for g in grid])
        monotone &= bool(np.all(np.diff(snm) >= 0))
    ok = exact and converged and monotone
    record(6, ok, f"DrvBased drv {level:.4f} V (expected 0.194 exactly: {exact}), "
                  f"1 mV convergence {converged}, SNM monotone {monotone}")
    assert ok


def test_criterion_7_snm_calibration(record, tech32):
    best = 0.0
    for pair in ("m12", "m34"):
        res = sizing_sweep(SweepGrid(np.arange(1, 4.01, 0.5), np.arange(1, 4.01, 0.5), pair=pair), tech32,
                           threads=0)
        best = max(best, res.best_value)
    lobes = max(abs(butterfly(preset_cell(m, tech32), v).lobe_a - butterfly(preset_cell(m, tech32), v).lobe_b)
                for m in MethodTag for v in (tech32.snm_sweep_vdd, 0.5))
    ok = abs(best - 0.059) <= 0.15 * 0.059 and lobes <= 1e-3
    record(7, ok, f"best hold SNM {1e3 * best:.1f} mV at {tech32.snm_sweep_vdd} V (59+-15%), "
                  f"max lobe asymmetry {1e3 * lobes:.3f} mV")
    assert ok


def test_criterion_8_variation(record, tech32):
    res = optimize(_row_config(tech32), tech32)
    a = variation_analysis(res, 10.0, 500, seed=7)
    b = variation_analysis(res, 10.0, 500, seed=7)
    ok = 5.0 <= a.mean_pct < res.reduction_pct and a == b
    record(8, ok, f"{res.plan.label} nominal {res.reduction_pct:.2f}%, mean under 10% variation "
                  f"{a.mean_pct:.2f}% over {a.trials} trials, repeatable {a == b}")
    assert ok


def test_criterion_9_workload_directions(record, tech32):
    mem = MemoryConfig(tech32, vdd_active=tech32.table_vdd)
    w = WorkloadProfile(200.0, 1000.0, 0.5, tech32.table_vdd)
    hot = evaluate_scenario(mem, with_idle(w, 0.0)).winner
    cold = evaluate_scenario(mem, with_idle(w, 1.0)).winner
    sweep = sweep_idle_fraction(mem, w, np.linspace(0, 1, 21))
    ok = hot is MethodTag.WRITE_BASED and cold is MethodTag.DRV_BASED and len(sweep.crossovers) > 0
    cross = [(lo, hi, a.value, b.value) for lo, hi, a, b in sweep.crossovers]
    record(9, ok, f"idle 0 -> {hot.value}, idle 1 -> {cold.value}, crossovers {cross}")
    assert ok


CLI_RUNS = [
    ["optimize", "--tech", "ptm32", "--n", "256", "--sizes", "3", "--vth", "dual"],
    ["optimize", "--table", "--threads", "4", "--variation", "100", "--seed", "11"],
    ["snm-sweep", "--w", "1:0.5:3", "--l", "1:1:4", "--threads", "4"],
    ["pad-curve", "--x", "0.05:0.05:0.5", "--n-step", "8"],
    ["compare", "--idle-grid", "0:0.25:1", "--threads", "4"],
]


def test_criterion_10_cli_determinism(record, tmp_path):
    same = True
    for i, argv in enumerate(CLI_RUNS):
        outs = []
        for rep in range(2):
            target = tmp_path / f"run{i}_{rep}.csv"
            proc = subprocess.run([sys.executable, "-m", "sram_pad", *argv, "--out", str(target)],
                                  capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outs.append(target.read_bytes())
        same &= outs[0] == outs[1] and len(outs[0]) > 0
    record(10, same, f"{len(CLI_RUNS)} invocations run twice, byte-identical {same}")
    assert same
