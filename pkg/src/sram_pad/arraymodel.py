"""A wordline row of N cells split into contiguous segments of cell variants."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .cellmodel import CellDesign, MethodTag, intrinsic_delay, preset_cell, raw_leakage_power, upsize
from .errors import InvalidParameterError, UndefinedMetricError
from .techmodel import Technology, VthClass

X_TOL = 1e-12


class SizeVersion(enum.IntEnum):
    NOMINAL = 1
    UPSIZED_I = 2
    UPSIZED_II = 3


@dataclass(frozen=True)
class Segment:
    count: int
    x: float  # um of extra layout width
    vth: VthClass = VthClass.HIGH

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 0:
            raise InvalidParameterError(f"segment count {self.count} must be a non-negative integer")
        if self.x < 0:
            raise InvalidParameterError(f"segment x={self.x} is negative")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "vth", VthClass(self.vth))


@dataclass(frozen=True)
class SegmentPlan:
    """Segments ordered from the wordline driver outward.

    For a mirrored plan (driven from both ends) the segments describe one
    half, from a driver to the middle, and their counts sum to N / 2.
    """

    segments: tuple
    n_total: int
    mirrored: bool = False
    method: MethodTag = MethodTag.CONVENTIONAL

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "method", MethodTag(self.method))
        if not 1 <= len(segs) <= 3:
            raise InvalidParameterError("a plan has between one and three segments")
        if self.mirrored and self.n_total % 2:
            raise InvalidParameterError("a mirrored row needs an even number of cells")
        if sum(s.count for s in segs) != self.n_half:
            raise InvalidParameterError(
                f"segment counts sum to {sum(s.count for s in segs)}, expected {self.n_half}"
            )
        if segs[0].x != 0.0:
            raise InvalidParameterError("the segment next to the driver must be nominal (x = 0)")
        keys = [(round(s.x, 12), s.vth) for s in segs]
        if len(set(keys)) != len(keys):
            raise InvalidParameterError("two segments share the same size and V_th")
        if any(b.x < a.x - X_TOL for a, b in zip(segs, segs[1:])):
            raise InvalidParameterError("up-size x must not decrease away from the driver")
        if len(self.distinct_x) > 3:
            raise InvalidParameterError("at most three size versions")

    @property
    def n_half(self) -> int:
        return self.n_total // 2 if self.mirrored else self.n_total

    @property
    def distinct_x(self) -> list:
        out = []
        for s in self.segments:
            if not out or abs(s.x - out[-1]) > X_TOL:
                out.append(s.x)
        return out

    def size_version(self, seg: Segment) -> SizeVersion:
        return SizeVersion(1 + next(i for i, x in enumerate(self.distinct_x) if abs(x - seg.x) <= X_TOL))

    @property
    def label(self) -> str:
        """Triplet label such as ``(1H,2H,3L)``; absent segments print as 0."""
        parts = [f"{int(self.size_version(s))}{s.vth.letter}" for s in self.segments]
        parts += ["0"] * (3 - len(parts))
        return "(" + ",".join(parts) + ")"

    @property
    def counts(self) -> tuple:
        return tuple(s.count for s in self.segments)

    def cells(self, tech: Technology) -> list:
        base = preset_cell(self.method, tech)
        return [upsize(base, s.x).with_vth(s.vth) if s.x else base.with_vth(s.vth) for s in self.segments]

    def to_text(self) -> str:
        text = f"{self.label};counts={','.join(str(c) for c in self.counts)}"
        for i, x in enumerate(self.distinct_x[1:], start=1):
            text += f";x{i}={x:.6g}"
        if self.mirrored:
            text += ";mirrored"
        return text

    @classmethod
    def from_text(cls, text: str, n_total: int | None = None, method=MethodTag.CONVENTIONAL) -> "SegmentPlan":
        parts = text.strip().split(";")
        m = re.fullmatch(r"\(([^)]*)\)", parts[0].strip())
        if not m:
            raise InvalidParameterError(f"bad plan label {parts[0]!r}")
        tokens = [t.strip() for t in m.group(1).split(",") if t.strip() != "0"]
        fields_ = {}
        mirrored = False
        for p in parts[1:]:
            if p.strip() == "mirrored":
                mirrored = True
                continue
            k, _, v = p.partition("=")
            fields_[k.strip()] = v.strip()
        try:
            counts = [int(c) for c in fields_["counts"].split(",")]
        except (KeyError, ValueError):
            raise InvalidParameterError("plan text needs counts=a,b,...") from None
        if len(counts) != len(tokens):
            raise InvalidParameterError("label and counts disagree in length")
        xs = {1: 0.0}
        for k, v in fields_.items():
            if re.fullmatch(r"x\d", k):
                xs[int(k[1:]) + 1] = float(v)
        segs = []
        for tok, c in zip(tokens, counts):
            tm = re.fullmatch(r"([123])([HL])", tok)
            if not tm:
                raise InvalidParameterError(f"bad segment token {tok!r}")
            version = int(tm.group(1))
            if version not in xs:
                raise InvalidParameterError(f"missing x{version - 1} for size version {version}")
            segs.append(Segment(c, xs[version], VthClass.HIGH if tm.group(2) == "H" else VthClass.LOW))
        half = sum(counts)
        n_total = n_total if n_total is not None else (2 * half if mirrored else half)
        return cls(tuple(segs), n_total, mirrored, method)


def baseline_plan(n_total: int, mirrored: bool = False, method=MethodTag.CONVENTIONAL) -> SegmentPlan:
    n = n_total // 2 if mirrored else n_total
    return SegmentPlan((Segment(n, 0.0, VthClass.HIGH),), n_total, mirrored, method)


@dataclass(frozen=True)
class WorkloadProfile:
    c_load: float  # fF
    t_cycle: float  # ps
    alpha: float
    vdd: float
    idle_fraction: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.t_cycle <= 0:
            raise InvalidParameterError("t_cycle must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameterError("alpha must lie in [0, 1]")
        if not 0.0 <= self.idle_fraction <= 1.0:
            raise InvalidParameterError("idle_fraction must lie in [0, 1]")
        if self.c_load < 0 or self.vdd < 0:
            raise InvalidParameterError("c_load and vdd must be non-negative")

    def dynamic_power(self) -> float:
        """Switching power in uW: fF * V^2 / ps is 1e-3 W."""
        return 0.5 * self.c_load * self.vdd**2 / self.t_cycle * self.alpha * 1e3


@dataclass(frozen=True)
class PadBreakdown:
    power: float  # uW
    area: float  # um^2
    delay: float  # ps
    pad: float
    critical_cell_index: int
    dynamic: float = 0.0
    leakage: float = 0.0

    @classmethod
    def of(cls, power, area, delay, index, dynamic=0.0, leakage=0.0) -> "PadBreakdown":
        return cls(power, area, delay, power * area * delay, int(index), dynamic, leakage)


# --------------------------------------------------------------------------
# per-cell geometry and timing

def _segment_of(plan: SegmentPlan) -> np.ndarray:
    return np.repeat(np.arange(len(plan.segments)), [s.count for s in plan.segments])


def half_positions(plan: SegmentPlan, tech: Technology) -> np.ndarray:
    """Distance from the driver of cells 1..N/2 (or 1..N when not mirrored)."""
    widths = np.repeat([tech.layout_w + s.x for s in plan.segments], [s.count for s in plan.segments])
    return np.cumsum(widths)


def _half_index(plan: SegmentPlan, i: int) -> int:
    if not 1 <= i <= plan.n_total:
        raise InvalidParameterError(f"cell index {i} outside 1..{plan.n_total}")
    if plan.mirrored and i > plan.n_half:
        return plan.n_total + 1 - i
    return i


def cell_position(plan: SegmentPlan, i: int, tech: Technology) -> float:
    """Wordline distance (um) from the nearer driver to the far edge of cell i."""
    return float(half_positions(plan, tech)[_half_index(plan, i) - 1])


def _segment_delays(plan: SegmentPlan, tech: Technology, vdd: float) -> list:
    return [intrinsic_delay(c, vdd) for c in plan.cells(tech)]


def delay_profile(plan: SegmentPlan, tech: Technology, vdd: float) -> np.ndarray:
    """Read delay (ps) of every cell 1..N along the row."""
    pos = half_positions(plan, tech)
    d = np.asarray(_segment_delays(plan, tech, vdd))[_segment_of(plan)]
    half = tech.k_wl * pos**2 + d
    return np.concatenate([half, half[::-1]]) if plan.mirrored else half


def cell_read_delay(plan: SegmentPlan, i: int, tech: Technology, vdd: float) -> float:
    j = _half_index(plan, i)
    pos = half_positions(plan, tech)[j - 1]
    seg = int(_segment_of(plan)[j - 1])
    return float(tech.k_wl * pos**2 + _segment_delays(plan, tech, vdd)[seg])


def _last_cell_delays(plan: SegmentPlan, tech: Technology, vdd: float) -> list:
    """(index, delay) of the last cell of each nonempty segment."""
    pos = half_positions(plan, tech)
    delays = _segment_delays(plan, tech, vdd)
    out, end = [], 0
    for s, d in zip(plan.segments, delays):
        end += s.count
        if s.count:
            out.append((end, float(tech.k_wl * pos[end - 1] ** 2 + d)))
    return out


def d_diff(plan: SegmentPlan, tech: Technology, vdd: float) -> float:
    """Slowest outer-segment end cell minus the end cell of the nominal segment.

    Delay is increasing inside a segment, so comparing segment end cells is
    enough to tell whether any up-sized cell is slower than the nominal one.
    """
    if plan.segments[0].count == 0:
        raise UndefinedMetricError("the nominal segment is empty")
    ends = _last_cell_delays(plan, tech, vdd)
    if len(ends) < 2:
        raise UndefinedMetricError("d_diff needs at least two nonempty segments")
    return max(d for _, d in ends[1:]) - ends[0][1]


def worst_case_delay(plan: SegmentPlan, tech: Technology, vdd: float) -> tuple:
    """(1-based index, delay in ps) of the slowest cell; lowest index on ties."""
    prof = delay_profile(plan, tech, vdd)
    i = int(np.argmax(prof))
    return i + 1, float(prof[i])


def row_area(plan: SegmentPlan, tech: Technology) -> float:
    half = tech.layout_h * sum(s.count * (tech.layout_w + s.x) for s in plan.segments)
    return 2.0 * half if plan.mirrored else half


def row_leakage(plan: SegmentPlan, tech: Technology, vdd: float) -> float:
    total = sum(s.count * raw_leakage_power(c, vdd) for s, c in zip(plan.segments, plan.cells(tech)))
    return 2.0 * total if plan.mirrored else total


def row_power(plan: SegmentPlan, workload: WorkloadProfile, tech: Technology) -> float:
    """Dynamic power scaled by the active share, plus leakage of every cell (uW)."""
    return workload.dynamic_power() * (1.0 - workload.idle_fraction) + row_leakage(plan, tech, workload.vdd)


def k_from_rc(r_per_um: float, c_per_um: float) -> float:
    """Wordline delay constant in ps/um^2 from ohm/um and fF/um (0.5 r c)."""
    if r_per_um <= 0 or c_per_um <= 0:
        raise InvalidParameterError("wire r and c must be positive")
    return 0.5 * r_per_um * c_per_um * 1e-3


def profile_rows(plan: SegmentPlan, tech: Technology, vdd: float):
    prof = delay_profile(plan, tech, vdd)
    pos = half_positions(plan, tech)
    full_pos = np.concatenate([pos, pos[::-1]]) if plan.mirrored else pos
    for i, (p, d) in enumerate(zip(full_pos, prof), start=1):
        yield (i, float(p), float(d))
