"""PAD cost, greedy hybrid assignment, exhaustive oracle and variation study."""
from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arraymodel import (
    PadBreakdown,
    Segment,
    SegmentPlan,
    WorkloadProfile,
    baseline_plan,
    half_positions,
    row_area,
    row_power,
    worst_case_delay,
)
from .cellmodel import MethodTag, intrinsic_delay, preset_cell, raw_intrinsic_delay, raw_leakage_power, upsize
from .errors import InoperableVoltageError, InvalidParameterError, SearchSpaceTooLargeError
from .techmodel import Technology, VthClass

VTH_RANK = {VthClass.HIGH: 0, VthClass.LOW: 1}
TABLE_PATTERNS = ("(1H,0,0)", "(1H,2H,0)", "(1H,2H,3H)", "(1H,1L,0)", "(1H,2L,0)", "(1H,2H,3L)")


class ConstraintMode(str, enum.Enum):
    DDIFF = "RequireDdiffNonpositive"
    NONE = "Unconstrained"


class PowerMode(str, enum.Enum):
    PER_PLAN = "per-plan"
    FROZEN = "frozen"  # power frozen at the all-nominal row's value


@dataclass(frozen=True)
class OptimizerConfig:
    n_cells: int
    workload: WorkloadProfile
    max_sizes: int = 3
    vth_set: frozenset = frozenset({VthClass.HIGH, VthClass.LOW})
    x_step: float = 0.05  # fraction of W
    x_max: float = 1.0  # fraction of W
    vdd: float = 0.5
    mirrored: bool = False
    constraint_mode: ConstraintMode = ConstraintMode.DDIFF
    power_mode: PowerMode = PowerMode.PER_PLAN
    method: MethodTag = MethodTag.CONVENTIONAL
    pattern: str | None = None  # restrict to one triplet shape, e.g. "(1H,2H,3L)"

    def __post_init__(self):
        object.__setattr__(self, "vth_set", frozenset(VthClass(v) for v in self.vth_set))
        object.__setattr__(self, "constraint_mode", ConstraintMode(self.constraint_mode))
        object.__setattr__(self, "power_mode", PowerMode(self.power_mode))
        object.__setattr__(self, "method", MethodTag(self.method))
        if self.max_sizes not in (1, 2, 3):
            raise InvalidParameterError("max_sizes must be 1, 2 or 3")
        if not self.vth_set:
            raise InvalidParameterError("vth_set is empty")
        if VthClass.HIGH not in self.vth_set:
            raise InvalidParameterError("the nominal segment needs High V_th; include it in vth_set")
        if not self.x_step > 0 or not self.x_max > 0:
            raise InvalidParameterError("x grid step and bound must be positive")
        if self.n_cells < 1 or (self.mirrored and (self.n_cells % 2 or self.n_cells < 2)):
            raise InvalidParameterError("n_cells must be positive (and even when mirrored)")
        if self.pattern is not None and self.pattern not in TABLE_PATTERNS:
            raise InvalidParameterError(f"pattern must be one of {TABLE_PATTERNS}")

    @property
    def n_half(self) -> int:
        return self.n_cells // 2 if self.mirrored else self.n_cells

    def x_fractions(self) -> np.ndarray:
        k = int(math.floor(self.x_max / self.x_step + 1e-9))
        return np.round(np.arange(k + 1) * self.x_step, 12)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    segment: int
    n: int
    x: float
    vth: VthClass
    cost: float  # PAD relative to the baseline row

    def line(self) -> str:
        return (f"iter={self.iteration} segment={self.segment} n={self.n} "
                f"x={self.x:.6g} vth={self.vth.value} rel_pad={self.cost:.6g}")


@dataclass(frozen=True)
class OptimizationResult:
    plan: SegmentPlan
    breakdown: PadBreakdown
    baseline: PadBreakdown
    reduction_pct: float
    trace: tuple = ()
    infeasible: bool = False
    config: OptimizerConfig | None = field(default=None, repr=False)
    tech: Technology | None = field(default=None, repr=False)

    def table_row(self) -> tuple:
        return (self.plan.label, "/".join(str(c) for c in self.plan.counts), self.reduction_pct)


# --------------------------------------------------------------------------
# cost evaluation

def pad_cost(plan: SegmentPlan, workload: WorkloadProfile, tech: Technology, vdd: float,
             power_mode: PowerMode = PowerMode.PER_PLAN) -> PadBreakdown:
    """Power x area x worst-case delay of a row."""
    power_mode = PowerMode(power_mode)
    ref = plan if power_mode is PowerMode.PER_PLAN else baseline_plan(plan.n_total, plan.mirrored, plan.method)
    power = row_power(ref, workload, tech)
    dyn = workload.dynamic_power() * (1.0 - workload.idle_fraction)
    area = row_area(plan, tech)
    idx, delay = worst_case_delay(plan, tech, vdd)
    return PadBreakdown.of(power, area, delay, idx, dyn, power - dyn)


def pad_closed_form(W, H, N, n, x, p, K, d1) -> tuple:
    """Closed-form row PAD with n up-sized cells at the far end.

    Returns ``(factored, expanded)``: the product form and its polynomial
    expansion in n, which agree up to rounding.
    """
    if n > N:
        raise InvalidParameterError("n must not exceed N")
    factored = p * (N * W * H + n * x * H) * (K * ((N - n) * W) ** 2 + d1)
    terms = [
        K * W**2 * x * H * n**3,
        K * W**3 * H * N * n**2,
        -2.0 * K * W**2 * x * H * N * n**2,
        -2.0 * K * W**3 * H * N**2 * n,
        K * W**2 * x * H * N**2 * n,
        d1 * x * H * n,
        K * W**3 * H * N**3,
        d1 * N * W * H,
    ]
    expanded = p * math.fsum(terms)
    return factored, expanded


@dataclass(frozen=True)
class _Option:
    """Characterized cell variant: x index, V_th, intrinsic delay, leakage."""

    xi: int
    x: float
    vth: VthClass
    delay: float
    leak: float


class _Evaluator:
    """Vectorized PAD of plans made from characterized options.

    Segment delays only need the end cell of each segment because delay
    grows with position inside a segment.
    """

    def __init__(self, config: OptimizerConfig, tech: Technology):
        self.config = config
        self.tech = tech
        self.W = tech.layout_w
        self.H = tech.layout_h
        self.K = tech.k_wl
        self.mult = 2.0 if config.mirrored else 1.0
        w = config.workload
        self.dyn = w.dynamic_power() * (1.0 - w.idle_fraction)
        base = preset_cell(config.method, tech)
        xs = config.x_fractions() * self.W
        self.options = {}
        for xi, x in enumerate(xs):
            for v in (VthClass.HIGH, VthClass.LOW):
                cell = (upsize(base, float(x)) if x > 0 else base).with_vth(v)
                try:
                    d = intrinsic_delay(cell, config.vdd)
                except InoperableVoltageError:
                    continue
                self.options[(xi, v)] = _Option(xi, float(x), v, d, raw_leakage_power(cell, w.vdd))
        if (0, VthClass.HIGH) not in self.options:
            raise InoperableVoltageError(f"nominal cell inoperable at vdd={config.vdd}")
        self.nominal = self.options[(0, VthClass.HIGH)]
        n = config.n_half
        self.base_power = self.dyn + self.mult * n * self.nominal.leak
        self.base_cost = self._raw(
            [np.array(float(n))], [self.nominal]
        )[0]

    def _raw(self, counts, opts):
        """(cost, feasible) for segment counts (arrays) and options, driver first."""
        pos = 0.0
        leak = 0.0
        ends = []
        for c, o in zip(counts, opts):
            pos = pos + c * (self.W + o.x)
            leak = leak + c * o.leak
            ends.append(np.where(c > 0, self.K * pos**2 + o.delay, -np.inf))
        delay = ends[0]
        for e in ends[1:]:
            delay = np.maximum(delay, e)
        if self.config.power_mode is PowerMode.FROZEN:
            power = self.base_power
        else:
            power = self.dyn + self.mult * leak
        cost = power * (self.mult * self.H * pos) * delay
        feasible = np.ones(np.shape(cost), dtype=bool)
        if self.config.constraint_mode is ConstraintMode.DDIFF:
            for e in ends[1:]:
                feasible &= e <= ends[0]
        return cost, feasible

    def costs(self, counts, opts):
        cost, feasible = self._raw(counts, opts)
        return np.where(feasible, cost / self.base_cost, np.inf)

    def option(self, xi, v):
        return self.options.get((xi, VthClass(v)))


def _pattern_parts(pattern):
    if pattern is None:
        return None
    toks = pattern.strip("()").split(",")
    return [t for t in toks if t != "0"]


def _iteration1_choices(cfg: OptimizerConfig, ev: _Evaluator):
    parts = _pattern_parts(cfg.pattern)
    nx = len(cfg.x_fractions())
    out = []
    for xi in range(nx):
        for v in (VthClass.HIGH, VthClass.LOW):
            if v not in cfg.vth_set or (xi == 0 and v is VthClass.HIGH):
                continue
            if parts is not None:
                if len(parts) == 1:
                    continue
                if len(parts) == 2:
                    want_x0 = parts[1][0] == "1"
                    if (xi == 0) != want_x0 or v.letter != parts[1][1]:
                        continue
                elif xi == 0:
                    continue
                elif parts[2][1] == "H" and v is VthClass.LOW:
                    continue
            o = ev.option(xi, v)
            if o is not None:
                out.append(o)
    return out


def _iteration2_choices(cfg: OptimizerConfig, ev: _Evaluator):
    """(parent, tail) option pairs for splitting the up-sized segment.

    Low V_th stays on the outermost segment, so the parent becomes High.
    """
    parts = _pattern_parts(cfg.pattern)
    nx = len(cfg.x_fractions())
    pairs = []
    for xa in range(1, nx):
        pa = ev.option(xa, VthClass.HIGH)
        if pa is None:
            continue
        for xb in range(xa, nx):
            for v in (VthClass.HIGH, VthClass.LOW):
                if v not in cfg.vth_set or (xb == xa and v is VthClass.HIGH):
                    continue
                if parts is not None:
                    if len(parts) != 3 or v.letter != parts[2][1] or xb == xa:
                        continue
                tb = ev.option(xb, v)
                if tb is not None:
                    pairs.append((pa, tb))
    return pairs


def _plan(cfg: OptimizerConfig, counts, opts) -> SegmentPlan:
    segs = [Segment(int(c), o.x, o.vth) for c, o in zip(counts, opts)]
    return SegmentPlan(tuple(segs), cfg.n_cells, cfg.mirrored, cfg.method)


def _finish(cfg, tech, plan, trace, infeasible=False) -> OptimizationResult:
    base = pad_cost(baseline_plan(cfg.n_cells, cfg.mirrored, cfg.method), cfg.workload, tech, cfg.vdd, cfg.power_mode)
    bd = pad_cost(plan, cfg.workload, tech, cfg.vdd, cfg.power_mode)
    red = 100.0 * (1.0 - bd.pad / base.pad)
    return OptimizationResult(plan, bd, base, red, tuple(trace), infeasible, cfg, tech)


def optimize(config: OptimizerConfig, tech: Technology) -> OptimizationResult:
    """Greedy hybrid assignment of up to three segments.

    Iteration 1 chooses (n, x, V_th) of the outermost segment. Iteration 2
    splits that segment in two, choosing the tail (n2, x2, V_th) and the
    parent's size again. The best plan seen is returned; it is never worse
    than the all-nominal row. Ties go to smaller n, then smaller x, then High.
    """
    cfg = config
    ev = _Evaluator(cfg, tech)
    N = cfg.n_half
    parts = _pattern_parts(cfg.pattern)
    base_plan = baseline_plan(cfg.n_cells, cfg.mirrored, cfg.method)
    trace = []
    best_key = (1.0, 0, 0.0, 0)
    best_plan = base_plan
    if cfg.max_sizes == 1 or N < 2 or (parts is not None and len(parts) == 1):
        return _finish(cfg, tech, base_plan, trace)

    # iteration 1: far-end segment
    n = np.arange(1, N, dtype=float)
    it1_key, it1 = None, None
    for o in _iteration1_choices(cfg, ev):
        c = ev.costs([N - n, n], [ev.nominal, o])
        i = int(np.argmin(c))
        if not np.isfinite(c[i]):
            continue
        key = (float(c[i]), int(n[i]), o.x, VTH_RANK[o.vth])
        if it1_key is None or key < it1_key:
            it1_key, it1 = key, (int(n[i]), o)
    if it1 is None:
        warnings.warn("no feasible assignment; returning the all-nominal row", RuntimeWarning)
        return _finish(cfg, tech, base_plan, trace, infeasible=True)
    n1, o1 = it1
    trace.append(TraceRecord(1, 2, n1, o1.x, o1.vth, it1_key[0]))
    pattern_plan = None
    if it1_key < best_key:
        best_key, best_plan = it1_key, _plan(cfg, [N - n1, n1], [ev.nominal, o1])
    if parts is not None and len(parts) == 2:
        pattern_plan = _plan(cfg, [N - n1, n1], [ev.nominal, o1])

    # iteration 2: split the far-end segment
    if cfg.max_sizes >= 3 and n1 >= 2 and (parts is None or len(parts) == 3):
        n2 = np.arange(1, n1, dtype=float)
        it2_key, it2 = None, None
        for pa, tb in _iteration2_choices(cfg, ev):
            c = ev.costs([np.full_like(n2, N - n1), n1 - n2, n2], [ev.nominal, pa, tb])
            i = int(np.argmin(c))
            if not np.isfinite(c[i]):
                continue
            key = (float(c[i]), int(n2[i]), pa.x, tb.x, VTH_RANK[tb.vth])
            if it2_key is None or key < it2_key:
                it2_key, it2 = key, (int(n2[i]), pa, tb)
        if it2 is not None:
            k2, pa, tb = it2
            trace.append(TraceRecord(2, 2, n1 - k2, pa.x, pa.vth, it2_key[0]))
            trace.append(TraceRecord(2, 3, k2, tb.x, tb.vth, it2_key[0]))
            plan2 = _plan(cfg, [N - n1, n1 - k2, k2], [ev.nominal, pa, tb])
            if parts is not None:
                pattern_plan = plan2
            if it2_key[0] < best_key[0]:
                best_key, best_plan = it2_key, plan2
    if parts is not None:
        if pattern_plan is None:
            warnings.warn(f"pattern {cfg.pattern} has no feasible plan", RuntimeWarning)
            return _finish(cfg, tech, base_plan, trace, infeasible=True)
        return _finish(cfg, tech, pattern_plan, trace)
    return _finish(cfg, tech, best_plan, trace)


def optimize_table(config: OptimizerConfig, tech: Technology, patterns=TABLE_PATTERNS, threads: int = 1) -> list:
    """One pattern-restricted optimization per triplet shape."""
    from dataclasses import replace

    cfgs = []
    for p in patterns:
        vset = {VthClass.HIGH} if "L" not in p else {VthClass.HIGH, VthClass.LOW}
        sizes = 3 if p.count(",0") == 0 else (2 if p.count(",0") == 1 else 1)
        cfgs.append(replace(config, pattern=p, vth_set=frozenset(vset), max_sizes=sizes))
    if threads == 1:
        return [optimize(c, tech) for c in cfgs]
    with ThreadPoolExecutor(max_workers=threads or None) as ex:
        return list(ex.map(lambda c: optimize(c, tech), cfgs))


# --------------------------------------------------------------------------
# exhaustive oracle

def oracle_cardinality(config: OptimizerConfig) -> int:
    N = config.n_half
    nx = len(config.x_fractions())
    nv = len(config.vth_set)
    total = 1
    if config.max_sizes >= 2:
        total += (N - 1) * (nx * nv - 1)
    if config.max_sizes >= 3:
        pairs = sum((nx - xa) * nv - 1 for xa in range(1, nx))
        total += pairs * (N - 1) * (N - 2) // 2
    return total


def brute_force_oracle(config: OptimizerConfig, tech: Technology, limit: int = 5_000_000) -> OptimizationResult:
    """Global optimum over every plan in the greedy's family, by enumeration."""
    cfg = config
    if cfg.n_half > 64:
        raise SearchSpaceTooLargeError(oracle_cardinality(cfg), limit)
    card = oracle_cardinality(cfg)
    if card > limit:
        raise SearchSpaceTooLargeError(card, limit)
    ev = _Evaluator(cfg, tech)
    N = cfg.n_half
    best_key = (1.0, 0, 0.0, 0)
    best = baseline_plan(cfg.n_cells, cfg.mirrored, cfg.method)
    parts = _pattern_parts(cfg.pattern)
    if cfg.max_sizes >= 2 and N >= 2 and (parts is None or len(parts) == 2):
        n = np.arange(1, N, dtype=float)
        for o in _iteration1_choices(cfg, ev):
            c = ev.costs([N - n, n], [ev.nominal, o])
            i = int(np.argmin(c))
            key = (float(c[i]), int(n[i]), o.x, VTH_RANK[o.vth])
            if np.isfinite(c[i]) and key < best_key:
                best_key = key
                best = _plan(cfg, [N - n[i], n[i]], [ev.nominal, o])
    if cfg.max_sizes >= 3 and N >= 3 and (parts is None or len(parts) == 3):
        a = np.arange(1, N, dtype=float)[:, None]
        b = np.arange(1, N, dtype=float)[None, :]
        n0 = N - a - b
        ok = n0 >= 1
        for pa, tb in _iteration2_choices(cfg, ev):
            c = ev.costs([np.where(ok, n0, 1.0), a + 0 * b, b + 0 * a], [ev.nominal, pa, tb])
            c = np.where(ok, c, np.inf)
            i = np.unravel_index(int(np.argmin(c)), c.shape)
            if np.isfinite(c[i]) and float(c[i]) < best_key[0]:
                best_key = (float(c[i]),) + best_key[1:]
                best = _plan(cfg, [n0[i], a[i[0], 0], b[0, i[1]]], [ev.nominal, pa, tb])
    return _finish(cfg, tech, best, [])


# --------------------------------------------------------------------------
# process variation

@dataclass(frozen=True)
class VariationSummary:
    nominal_pct: float
    mean_pct: float
    min_pct: float
    max_pct: float
    std_pct: float
    trials: int
    sigma_pct: float
    seed: int | None


def _row_samples(plan: SegmentPlan, tech: Technology, vdd: float, leak_vdd: float, ws, vs):
    """Per-trial worst delay and total leakage of a row under perturbations.

    ``ws`` and ``vs`` hold width and V_th scale factors, one column per cell
    over the full row.
    """
    pos = half_positions(plan, tech)
    if plan.mirrored:
        pos = np.concatenate([pos, pos[::-1]])
    seg_idx = np.repeat(np.arange(len(plan.segments)), plan.counts)
    if plan.mirrored:
        seg_idx = np.concatenate([seg_idx, seg_idx[::-1]])
    delay = np.empty_like(ws)
    leak = np.empty_like(ws)
    for k, cell in enumerate(plan.cells(tech)):
        cols = seg_idx == k
        if not cols.any():
            continue
        delay[:, cols] = raw_intrinsic_delay(cell, vdd, ws[:, cols], vs[:, cols])
        leak[:, cols] = raw_leakage_power(cell, leak_vdd, ws[:, cols], vs[:, cols])
    delay += tech.k_wl * pos**2
    return delay.max(axis=1), leak.sum(axis=1)


def variation_analysis(result: OptimizationResult, sigma_pct: float = 10.0, trials: int = 500,
                       seed: int | None = 0, chunk: int = 100) -> VariationSummary:
    """Monte Carlo reduction of a fixed plan against the all-nominal row.

    Every cell gets independent uniform +/- sigma_pct scale factors on its
    V_th and transistor widths. Plan and baseline see the same draws.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be at least 1")
    if sigma_pct < 0:
        raise InvalidParameterError("sigma_pct must be non-negative")
    cfg, tech = result.config, result.tech
    if cfg is None or tech is None:
        raise InvalidParameterError("result lacks its configuration")
    plan = result.plan
    base = baseline_plan(cfg.n_cells, cfg.mirrored, cfg.method)
    w = cfg.workload
    dyn = w.dynamic_power() * (1.0 - w.idle_fraction)
    rng = np.random.default_rng(seed)
    s = sigma_pct / 100.0
    out = []
    a_plan, a_base = row_area(plan, tech), row_area(base, tech)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        vs = 1.0 + s * rng.uniform(-1.0, 1.0, size=(m, cfg.n_cells))
        ws = 1.0 + s * rng.uniform(-1.0, 1.0, size=(m, cfg.n_cells))
        d_p, l_p = _row_samples(plan, tech, cfg.vdd, w.vdd, ws, vs)
        d_b, l_b = _row_samples(base, tech, cfg.vdd, w.vdd, ws, vs)
        if cfg.power_mode is PowerMode.FROZEN:
            p_p = p_b = dyn + l_b
        else:
            p_p, p_b = dyn + l_p, dyn + l_b
        out.append(100.0 * (1.0 - (p_p * a_plan * d_p) / (p_b * a_base * d_b)))
        done += m
    red = np.concatenate(out)
    return VariationSummary(
        nominal_pct=result.reduction_pct,
        mean_pct=float(red.mean()),
        min_pct=float(red.min()),
        max_pct=float(red.max()),
        std_pct=float(red.std()),
        trials=trials,
        sigma_pct=sigma_pct,
        seed=seed,
    )


# --------------------------------------------------------------------------
# closed-form curve family

def pad_curve(tech: Technology, workload: WorkloadProfile, x_fractions, n_values=None,
              vdd: float | None = None, method=MethodTag.CONVENTIONAL, n_cells: int = 256) -> list:
    """Rows (x/W, n, PAD, PAD/PAD(n=0)) of the closed form with frozen power."""
    vdd = workload.vdd if vdd is None else vdd
    base = baseline_plan(n_cells, method=method)
    p = row_power(base, workload, tech)
    d1 = intrinsic_delay(preset_cell(method, tech), vdd)
    n_values = range(n_cells + 1) if n_values is None else n_values
    rows = []
    for xf in x_fractions:
        x = xf * tech.layout_w
        ref = pad_closed_form(tech.layout_w, tech.layout_h, n_cells, 0, x, p, tech.k_wl, d1)[0]
        for n in n_values:
            f = pad_closed_form(tech.layout_w, tech.layout_h, n_cells, n, x, p, tech.k_wl, d1)[0]
            rows.append((float(xf), int(n), f, f / ref))
    return rows
