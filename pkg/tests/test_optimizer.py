import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sram_pad.arraymodel import Segment, SegmentPlan, WorkloadProfile, baseline_plan, d_diff
from sram_pad.errors import InvalidParameterError, SearchSpaceTooLargeError
from sram_pad.optimizer import (
    ConstraintMode,
    OptimizerConfig,
    PowerMode,
    brute_force_oracle,
    optimize,
    optimize_table,
    oracle_cardinality,
    pad_closed_form,
    pad_cost,
    pad_curve,
    variation_analysis,
)
from sram_pad.techmodel import VthClass

H, L = VthClass.HIGH, VthClass.LOW


def _exact(W, H_, N, n, x, p, K, d1):
    W, H_, x, p, K, d1 = map(Fraction, (W, H_, x, p, K, d1))
    return p * (N * W * H_ + n * x * H_) * (K * ((N - n) * W) ** 2 + d1)


@settings(max_examples=200, deadline=None)
@given(
    W=st.floats(0.1, 3.0), H_=st.floats(0.1, 3.0), N=st.integers(1, 512), frac=st.floats(0, 1),
    x=st.floats(0, 3.0), p=st.floats(1e-3, 1e3), K=st.floats(1e-5, 1e-2), d1=st.floats(1.0, 1e3),
)
def test_closed_form_against_exact_rationals(W, H_, N, frac, x, p, K, d1):
    n = int(frac * N)
    f, e = pad_closed_form(W, H_, N, n, x, p, K, d1)
    exact = float(_exact(W, H_, N, n, x, p, K, d1))
    assert f == pytest.approx(exact, rel=1e-12)
    assert e == pytest.approx(exact, rel=1e-12)


def test_closed_form_rejects_n_above_N():
    with pytest.raises(InvalidParameterError):
        pad_closed_form(1, 1, 4, 5, 0.1, 1, 1e-3, 10)


def _cfg(n=16, **kw):
    kw.setdefault("x_step", 0.1)
    return OptimizerConfig(n, WorkloadProfile(200.0, 1000.0, 0.5, 0.5), **kw)


def _enumerate_plans(cfg, tech):
    """Every plan in the search family, built from public types only."""
    N = cfg.n_half
    xs = [float(x) * tech.layout_w for x in cfg.x_fractions()]
    vset = sorted(cfg.vth_set, key=lambda v: v is L)
    yield baseline_plan(cfg.n_cells, cfg.mirrored)
    if cfg.max_sizes >= 2:
        for n in range(1, N):
            for x, v in itertools.product(xs, vset):
                if x == 0 and v is H:
                    continue
                yield SegmentPlan((Segment(N - n, 0.0), Segment(n, x, v)), cfg.n_cells, cfg.mirrored)
    if cfg.max_sizes >= 3:
        for a in range(1, N):
            for b in range(1, N - a):
                for ia, xa in enumerate(xs[1:], start=1):
                    for xb in xs[ia:]:
                        for v in vset:
                            if xb == xa and v is H:
                                continue
                            yield SegmentPlan((Segment(N - a - b, 0.0), Segment(a, xa), Segment(b, xb, v)),
                                              cfg.n_cells, cfg.mirrored)


def _reference_best(cfg, tech):
    best = None
    for plan in _enumerate_plans(cfg, tech):
        if cfg.constraint_mode is ConstraintMode.DDIFF and len(plan.segments) > 1:
            if d_diff(plan, tech, cfg.vdd) > 0:
                continue
        pad = pad_cost(plan, cfg.workload, tech, cfg.vdd, cfg.power_mode).pad
        if best is None or pad < best:
            best = pad
    return best


@pytest.mark.parametrize("sizes", [2, 3])
@pytest.mark.parametrize("constraint", list(ConstraintMode))
def test_oracle_matches_plain_enumeration(tech32, sizes, constraint):
    cfg = _cfg(8, max_sizes=sizes, x_step=0.25, constraint_mode=constraint)
    ref = _reference_best(cfg, tech32)
    got = brute_force_oracle(cfg, tech32).breakdown.pad
    assert got == pytest.approx(ref, rel=1e-12)


def test_oracle_cardinality_counts_family(tech32):
    for sizes in (1, 2, 3):
        cfg = _cfg(7, max_sizes=sizes, x_step=0.25)
        assert oracle_cardinality(cfg) == sum(1 for _ in _enumerate_plans(cfg, tech32))


def test_oracle_limits(tech32):
    with pytest.raises(SearchSpaceTooLargeError):
        brute_force_oracle(_cfg(128), tech32)
    with pytest.raises(SearchSpaceTooLargeError):
        brute_force_oracle(_cfg(32, x_step=0.05), tech32, limit=1000)


def test_greedy_never_worse_than_baseline(tech32):
    for n in (2, 5, 16, 64):
        res = optimize(_cfg(n), tech32)
        assert res.breakdown.pad <= res.baseline.pad
        assert res.reduction_pct >= 0


def test_single_size_is_baseline(tech32):
    res = optimize(_cfg(16, max_sizes=1), tech32)
    assert res.plan == baseline_plan(16) and res.reduction_pct == 0.0


def test_single_vth_has_no_low_segment(tech32):
    res = optimize(_cfg(64, vth_set={H}), tech32)
    assert all(s.vth is H for s in res.plan.segments)


def test_reduction_matches_breakdowns(tech32):
    res = optimize(_cfg(32), tech32)
    assert res.reduction_pct == pytest.approx(100 * (1 - res.breakdown.pad / res.baseline.pad))
    again = pad_cost(res.plan, res.config.workload, tech32, res.config.vdd)
    assert again.pad == pytest.approx(res.breakdown.pad, rel=1e-12)


def test_trace_records(tech32):
    res = optimize(_cfg(32), tech32)
    assert res.trace and res.trace[0].iteration == 1
    assert "rel_pad=" in res.trace[0].line()


def test_mirrored_run(tech32):
    res = optimize(_cfg(32, mirrored=True), tech32)
    assert res.plan.mirrored and sum(res.plan.counts) == 16
    assert res.breakdown.pad <= res.baseline.pad


def test_frozen_power_mode(tech32):
    res = optimize(_cfg(32, power_mode=PowerMode.FROZEN), tech32)
    assert res.breakdown.power == pytest.approx(res.baseline.power)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        _cfg(16, max_sizes=4)
    with pytest.raises(InvalidParameterError):
        _cfg(16, vth_set={L})
    with pytest.raises(InvalidParameterError):
        _cfg(7, mirrored=True)
    with pytest.raises(InvalidParameterError):
        _cfg(16, pattern="(1H,3L,0)")


@pytest.mark.filterwarnings("ignore:pattern:RuntimeWarning")
def test_table_patterns(tech32):
    rows = optimize_table(_cfg(64), tech32)
    labels = [r.plan.label for r in rows]
    assert labels[0] == "(1H,0,0)"
    for r in rows[1:]:
        assert r.plan.label == r.config.pattern or r.infeasible
    threaded = optimize_table(_cfg(64), tech32, threads=3)
    assert [r.table_row() for r in threaded] == [r.table_row() for r in rows]


def test_variation_determinism_and_zero_sigma(tech32):
    res = optimize(_cfg(64), tech32)
    a = variation_analysis(res, 10, 60, seed=3)
    b = variation_analysis(res, 10, 60, seed=3)
    assert a == b
    z = variation_analysis(res, 0, 5, seed=1)
    assert z.mean_pct == pytest.approx(res.reduction_pct, abs=1e-9)
    with pytest.raises(InvalidParameterError):
        variation_analysis(res, 10, 0)


def test_pad_curve_rows(tech32):
    w = WorkloadProfile(200.0, 1000.0, 0.5, 0.5)
    rows = pad_curve(tech32, w, [0.1], n_values=[0, 10, 256])
    assert [r[1] for r in rows] == [0, 10, 256]
    assert rows[0][3] == 1.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_ddiff_feasible_random(tech32, seed):
    rnd = random.Random(seed)
    cfg = _cfg(
        rnd.choice([4, 8, 16, 24, 40]),
        max_sizes=rnd.choice([2, 3]),
        x_step=rnd.choice([0.05, 0.1, 0.2]),
        vth_set=rnd.choice([{H}, {H, L}]),
        mirrored=rnd.random() < 0.3,
    )
    res = optimize(cfg, tech32)
    if len([s for s in res.plan.segments if s.count]) > 1:
        assert d_diff(res.plan, tech32, cfg.vdd) <= 1e-12
