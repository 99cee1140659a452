"""Butterfly curves, static noise margins, write margin and retention voltage."""
from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .cellmodel import CellDesign, HalfCell, MethodTag, TransistorSizing, bisect_decreasing, half_cell, preset_cell
from .errors import InfeasibleDesignError, InvalidParameterError, NumericalFailureError, SramPadError
from .techmodel import Technology, fast_drain_current as drain_current

SQRT2 = math.sqrt(2.0)
COARSE_STEP = 0.002
FINE_STEP = 0.0001
BISECT_TOL = 0.001
VTC_ITERS = 40  # vdd / 2**40 is far below the 0.1 mV refinement step


class SnmMode(str, enum.Enum):
    HOLD = "Hold"
    READ = "Read"


class Metric(str, enum.Enum):
    HOLD_SNM = "HoldSnm"
    READ_SNM = "ReadSnm"
    WRITE_MARGIN = "WriteMargin"


@dataclass(frozen=True, eq=False)
class SnmResult:
    snm: float
    lobe_a: float
    lobe_b: float
    vtc_forward: tuple  # (vin, vout) arrays
    vtc_mirror: tuple


def vtc(tech: Technology, hc: HalfCell, vdd: float, vin, mode: str = "hold", v_bl: float | None = None):
    """Inverter output for each input voltage, solved from node current balance.

    ``mode`` selects the access device state: "hold" (wordline low, bitline at
    vdd), "read" (wordline high, bitline at vdd) or "write" (wordline high,
    bitline at ``v_bl``).
    """
    dev = tech.device
    pdev = dev.pmos()
    vin = np.asarray(vin, dtype=float)

    def net(vout):
        i = drain_current(pdev, hc.vth_p, hc.wl_pu, vdd - vin, vdd - vout, dibl=hc.dibl_pu)
        i = i - drain_current(dev, hc.vth_n, hc.wl_pd, vin, vout, dibl=hc.dibl_pd)
        if mode == "hold":
            i = i + drain_current(dev, hc.vth_n, hc.wl_ax, -vout, vdd - vout, dibl=hc.dibl_ax)
        elif mode == "read":
            i = i + drain_current(dev, hc.vth_n, hc.wl_ax, vdd - vout, vdd - vout, dibl=hc.dibl_ax)
        elif mode == "write":
            lo = np.minimum(vout, v_bl)
            mag = drain_current(dev, hc.vth_n, hc.wl_ax, vdd - lo, np.abs(vout - v_bl), dibl=hc.dibl_ax)
            i = i + np.where(vout < v_bl, mag, -mag)
        else:
            raise InvalidParameterError(f"unknown VTC mode {mode!r}")
        return i

    zeros = np.zeros_like(vin)
    top = np.full_like(vin, vdd)
    n0, n1 = net(zeros), net(top)
    bad = (n0 < -1e-9) | (n1 > 1e-9)
    if np.any(bad):
        v = float(np.atleast_1d(vin)[np.argmax(np.atleast_1d(bad))])
        raise NumericalFailureError(f"VTC root not bracketed at vin={v:.4g} V", voltage=v)
    return bisect_decreasing(net, zeros, top, VTC_ITERS)


def _rotated(x, y):
    u = (x - y) / SQRT2
    w = (x + y) / SQRT2
    order = np.argsort(u, kind="stable")
    return u[order], w[order]


def _lobe_gap(fwd, mir, u_split):
    """Largest signed diagonal gap on each side of ``u_split``."""
    ua, wa = _rotated(*fwd)
    ub, wb = _rotated(*mir)
    lo, hi = max(ua[0], ub[0]), min(ua[-1], ub[-1])
    if hi <= lo:
        return 0.0, 0.0, None, None
    grid = np.union1d(ua[(ua >= lo) & (ua <= hi)], ub[(ub >= lo) & (ub <= hi)])
    diff = np.interp(grid, ua, wa) - np.interp(grid, ub, wb)
    left = grid <= u_split
    right = ~left
    a = diff[left].max() if left.any() else 0.0
    b = (-diff[right]).max() if right.any() else 0.0
    ua_star = grid[left][np.argmax(diff[left])] if left.any() else None
    ub_star = grid[right][np.argmax(-diff[right])] if right.any() else None
    return a, b, ua_star, ub_star


def _fixed_points(tech, hc_a, hc_b, vdd, mode, grid, qb=None):
    """Roots of q -> f(g(q)) - q on a grid, where Q = f(QB) and QB = g(Q)."""
    if qb is None:
        qb = vtc(tech, hc_b, vdd, grid, mode)
    r = vtc(tech, hc_a, vdd, qb, mode) - grid
    s = np.sign(r)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    roots = []
    for i in idx:
        t = r[i] / (r[i] - r[i + 1])
        roots.append(grid[i] + t * (grid[i + 1] - grid[i]))
    exact = np.nonzero(r == 0)[0]
    roots.extend(grid[exact].tolist())
    return sorted(roots)


def butterfly_halves(tech: Technology, hc_a: HalfCell, hc_b: HalfCell, vdd: float, mode="hold") -> SnmResult:
    """Noise margin of a cell given its two half-cells.

    The forward curve is Q = f(QB) from half A, the mirror curve QB = g(Q)
    from half B. Lobes are measured in a frame rotated by 45 degrees; a square
    of side s has diagonal gap s * sqrt(2) there.
    """
    mode = mode.value.lower() if isinstance(mode, SnmMode) else str(mode).lower()
    if vdd <= 0:
        empty = (np.zeros(1), np.zeros(1))
        return SnmResult(0.0, 0.0, 0.0, empty, empty)
    n = max(int(round(vdd / COARSE_STEP)), 2)
    vin = np.linspace(0.0, vdd, n + 1)
    fa = vtc(tech, hc_a, vdd, vin, mode)
    gb = fa if hc_b is hc_a else vtc(tech, hc_b, vdd, vin, mode)
    fwd = (vin, fa)  # x = QB, y = Q
    mir = (gb, vin)  # x = QB, y = Q
    roots = _fixed_points(tech, hc_a, hc_b, vdd, mode, vin, qb=gb)
    if len(roots) < 3:
        return SnmResult(0.0, 0.0, 0.0, (vin, fa), (vin, gb))
    q_m = roots[len(roots) // 2]
    qb_m = float(vtc(tech, hc_b, vdd, np.array([q_m]), mode)[0])
    u_split = (qb_m - q_m) / SQRT2
    a, b, ua_star, ub_star = _lobe_gap(fwd, mir, u_split)

    # local refinement of each lobe on a fine input grid around its optimum
    def refine(u_star):
        if u_star is None:
            return fwd, mir
        # input voltages on each curve whose rotated abscissa is nearest u_star
        da = np.abs((fwd[0] - fwd[1]) / SQRT2 - u_star)
        db = np.abs((mir[0] - mir[1]) / SQRT2 - u_star)
        va = vin[np.argmin(da)]
        vb = vin[np.argmin(db)]
        win = 6 * COARSE_STEP
        fa_in = np.arange(max(va - win, 0.0), min(va + win, vdd) + FINE_STEP / 2, FINE_STEP)
        fb_in = np.arange(max(vb - win, 0.0), min(vb + win, vdd) + FINE_STEP / 2, FINE_STEP)
        f_fine = (fa_in, vtc(tech, hc_a, vdd, fa_in, mode))
        g_fine = (vtc(tech, hc_b, vdd, fb_in, mode), fb_in)
        return f_fine, g_fine

    fa_fine, ma_fine = refine(ua_star)
    a_ref, _, _, _ = _lobe_gap(fa_fine, ma_fine, np.inf)
    fb_fine, mb_fine = refine(ub_star)
    _, b_ref, _, _ = _lobe_gap(fb_fine, mb_fine, -np.inf)
    a = max(a, a_ref)
    b = max(b, b_ref)
    lobe_a = max(a, 0.0) / SQRT2
    lobe_b = max(b, 0.0) / SQRT2
    return SnmResult(min(lobe_a, lobe_b), lobe_a, lobe_b, (vin, fa), (vin, gb))


def butterfly(cell: CellDesign, vdd: float, mode=SnmMode.HOLD) -> SnmResult:
    hc = half_cell(cell)
    return butterfly_halves(cell._tech(), hc, hc, float(vdd), mode)


def hold_snm(cell: CellDesign, vdd: float) -> float:
    return _snm_cached(cell, round(float(vdd), 9), "hold")


def read_snm(cell: CellDesign, vdd: float) -> float:
    return _snm_cached(cell, round(float(vdd), 9), "read")


@functools.lru_cache(maxsize=65536)
def _snm_cached(cell: CellDesign, vdd: float, mode: str) -> float:
    return butterfly(cell, vdd, mode).snm


# --------------------------------------------------------------------------
# write margin

def write_flips(cell: CellDesign, vdd: float, v_bl: float) -> bool:
    """True when driving the bitline to ``v_bl`` overwrites a stored one.

    The stored state is Q high. Iterating Q -> f_w(g_r(Q)) from Q = vdd is a
    monotone sequence that settles on the largest fixed point of the loop
    map, so that fixed point decides whether the cell ends up flipped.
    """
    tech = cell._tech()
    hc = half_cell(cell)
    grid = np.linspace(0.0, vdd, max(int(round(vdd / 0.001)), 2) + 1)
    qb = vtc(tech, hc, vdd, grid, "read")
    q_next = vtc(tech, hc, vdd, qb, "write", v_bl=v_bl)
    r = q_next - grid
    nonneg = np.nonzero(r >= 0)[0]
    if nonneg.size == 0:
        return True
    i = nonneg[-1]
    q_star = grid[i]
    if i + 1 < grid.size:
        q_star = grid[i] + r[i] / (r[i] - r[i + 1]) * (grid[i + 1] - grid[i])
    qb_star = float(vtc(tech, hc, vdd, np.array([q_star]), "read")[0])
    return q_star < qb_star


def write_margin(cell: CellDesign, vdd: float) -> float:
    """Highest bitline voltage (V) that still writes the cell; vdd minus the
    smallest flipping bitline differential. Zero when even 0 V fails."""
    return _write_margin_cached(cell, round(float(vdd), 9))


@functools.lru_cache(maxsize=65536)
def _write_margin_cached(cell: CellDesign, vdd: float) -> float:
    if vdd <= 0 or not write_flips(cell, vdd, 0.0):
        return 0.0
    lo, hi = 0.0, vdd
    if write_flips(cell, vdd, vdd):
        return vdd
    while hi - lo > BISECT_TOL / 4:
        mid = 0.5 * (lo + hi)
        if write_flips(cell, vdd, mid):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# retention and minimum operating voltages

def combine_retention_margins(v_star: float, floor: float, variation: float, guard: float) -> float:
    """Floor the analytic minimum at the thermal limit, then add margins."""
    return max(v_star, floor) + variation + guard


def _min_voltage(metric_fn, target: float, v_hi: float) -> float:
    """Smallest vdd in (0, v_hi] with metric >= target, to 1 mV."""
    if metric_fn(v_hi) < target:
        raise InfeasibleDesignError(
            f"margin {target:.4g} V not reached even at {v_hi:.4g} V"
        )
    lo, hi = 0.0, v_hi
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if metric_fn(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def retention_minimum(cell: CellDesign, snm_min: float | None = None) -> float:
    """Smallest supply (V) with hold SNM >= snm_min, before margins."""
    tech = cell._tech()
    snm_min = tech.snm_min if snm_min is None else snm_min
    if not snm_min > 0:
        raise InvalidParameterError("snm_min must be positive")
    return _min_voltage(lambda v: hold_snm(cell, v), snm_min, tech.vdd_nominal)


@functools.lru_cache(maxsize=4096)
def _drv_cached(cell: CellDesign, snm_min: float, floor: float, variation: float, guard: float) -> float:
    v_star = retention_minimum(cell, snm_min)
    return combine_retention_margins(v_star, floor, variation, guard)


def drv(cell: CellDesign, tech: Technology | None = None, snm_min: float | None = None) -> float:
    """Data retention voltage in V, guard band and variation margin included."""
    if tech is not None and cell.tech is not tech:
        cell = replace(cell, tech=tech)
    tech = cell._tech()
    snm_min = tech.snm_min if snm_min is None else float(snm_min)
    if not snm_min > 0:
        raise InvalidParameterError("snm_min must be positive")
    return _drv_cached(cell, snm_min, tech.thermal_noise_floor, tech.variation_margin, tech.guard_band)


def is_operable(cell: CellDesign, vdd: float) -> bool:
    """True when vdd lies above the cell's DRV, usually with a single SNM solve.

    Bisection lands within BISECT_TOL above the true SNM threshold, so a
    passing SNM check 1.5 x BISECT_TOL below the margin-free headroom proves
    the DRV is lower than vdd. Otherwise the full DRV decides.
    """
    tech = cell._tech()
    head = vdd - tech.variation_margin - tech.guard_band
    probe = head - 1.5 * BISECT_TOL
    if probe > tech.thermal_noise_floor and probe <= tech.vdd_nominal:
        if hold_snm(cell, probe) >= tech.snm_min:
            return True
    return vdd > drv(cell)


def min_operating_voltage(cell: CellDesign, op: str, margin_min: float) -> float:
    """Lowest supply meeting a read-SNM or write-margin target, plus margins."""
    if not margin_min > 0:
        raise InvalidParameterError("margin_min must be positive")
    tech = cell._tech()
    op = str(getattr(op, "value", op)).lower()
    if op == "read":
        fn = lambda v: read_snm(cell, v)  # noqa: E731
    elif op == "write":
        fn = lambda v: write_margin(cell, v)  # noqa: E731
    else:
        raise InvalidParameterError(f"unknown operation {op!r}")
    v_star = _min_voltage(fn, margin_min, tech.vdd_nominal)
    return combine_retention_margins(v_star, tech.thermal_noise_floor, tech.variation_margin, tech.guard_band)


# --------------------------------------------------------------------------
# sizing sweeps

PAIR_FIELDS = {"m12": ("w_m12", "l_m12"), "m34": ("w_m34", "l_m34"), "m56": ("w_m56", "l_m56")}


@dataclass(frozen=True)
class SweepGrid:
    w_values: tuple
    l_values: tuple
    target_metric: Metric = Metric.HOLD_SNM
    pair: str = "m12"

    def __post_init__(self):
        object.__setattr__(self, "w_values", tuple(float(v) for v in self.w_values))
        object.__setattr__(self, "l_values", tuple(float(v) for v in self.l_values))
        object.__setattr__(self, "target_metric", Metric(self.target_metric))
        for name in ("w_values", "l_values"):
            vals = getattr(self, name)
            if not vals:
                raise InvalidParameterError(f"{name} is empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise InvalidParameterError(f"{name} must be strictly increasing")
        if self.pair not in PAIR_FIELDS:
            raise InvalidParameterError(f"pair must be one of {sorted(PAIR_FIELDS)}")


@dataclass(frozen=True)
class SweepResult:
    grid: SweepGrid
    values: dict  # (w, l) -> metric in V, or None when the point failed
    best: tuple | None
    best_value: float | None


def metric_value(cell: CellDesign, metric: Metric, vdd: float) -> float:
    metric = Metric(metric)
    if metric is Metric.HOLD_SNM:
        return hold_snm(cell, vdd)
    if metric is Metric.READ_SNM:
        return read_snm(cell, vdd)
    return write_margin(cell, vdd)


def sizing_sweep(grid: SweepGrid, tech: Technology, vdd: float | None = None,
                 base=MethodTag.DRV_BASED, threads: int = 1) -> SweepResult:
    """Evaluate the target metric over (w, l) of one transistor pair.

    Other transistors keep the sizing of the ``base`` preset. Points whose
    evaluation fails numerically are recorded as None.
    """
    vdd = tech.snm_sweep_vdd if vdd is None else vdd
    cell0 = base if isinstance(base, CellDesign) else preset_cell(base, tech)
    wf, lf = PAIR_FIELDS[grid.pair]
    points = [(w, l) for w in grid.w_values for l in grid.l_values]

    def evaluate(pt):
        w, l = pt
        try:
            sizing = replace(cell0.sizing, **{wf: w, lf: l})
            return metric_value(replace(cell0, sizing=sizing), grid.target_metric, vdd)
        except SramPadError:
            return None

    if threads == 1:
        vals = [evaluate(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as ex:
            vals = list(ex.map(evaluate, points))
    values = dict(zip(points, vals))
    ok = [(v, p) for p, v in zip(points, vals) if v is not None]
    if not ok:
        return SweepResult(grid, values, None, None)
    best_value = max(v for v, _ in ok)
    best = next(p for v, p in ok if v == best_value)  # first in grid order
    return SweepResult(grid, values, best, best_value)


def sweep_rows(result: SweepResult):
    for (w, l), v in sorted(result.values.items()):
        yield (w, l, "" if v is None else v)
