"""6T cell variants: sizing presets, up-sizing, read delay, leakage, wordline load."""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InoperableVoltageError, InvalidParameterError, UnsupportedTechnologyError
from .techmodel import (
    DeviceParams,
    Technology,
    VthClass,
    fast_drain_current,
    subthreshold_leakage,
)


class MethodTag(str, enum.Enum):
    CONVENTIONAL = "Conventional"
    DRV_BASED = "DrvBased"
    READ_BASED = "ReadBased"
    WRITE_BASED = "WriteBased"


@dataclass(frozen=True)
class TransistorSizing:
    """Widths and lengths in multiples of l_min.

    M1/M2 are the pull-down NMOS, M3/M4 the pull-up PMOS, M5/M6 the access NMOS.
    """

    w_m12: float
    w_m34: float
    w_m56: float
    l_m12: float
    l_m34: float
    l_m56: float

    def __post_init__(self):
        for name in ("w_m12", "w_m34", "w_m56", "l_m12", "l_m34", "l_m56"):
            if not getattr(self, name) >= 1.0:
                raise InvalidParameterError(f"{name}={getattr(self, name)} below 1 x l_min")

    def scaled(self, factor: float) -> "TransistorSizing":
        return TransistorSizing(
            self.w_m12 * factor, self.w_m34 * factor, self.w_m56 * factor,
            self.l_m12, self.l_m34, self.l_m56,
        )

    def as_tuple(self) -> tuple:
        return (self.w_m12, self.w_m34, self.w_m56, self.l_m12, self.l_m34, self.l_m56)


@dataclass(frozen=True)
class CellDesign:
    sizing: TransistorSizing
    vth_class: VthClass
    layout_w: float  # um
    layout_h: float  # um
    upsize_x: float = 0.0  # um added to layout_w
    method_tag: MethodTag = MethodTag.CONVENTIONAL
    tech: Technology | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.layout_w <= 0 or self.layout_h <= 0:
            raise InvalidParameterError("layout footprint must be positive")
        if self.upsize_x < 0:
            raise InvalidParameterError("upsize_x must be non-negative")

    @property
    def width_factor(self) -> float:
        return 1.0 + self.upsize_x / self.layout_w

    @property
    def footprint_w(self) -> float:
        return self.layout_w + self.upsize_x

    @property
    def area(self) -> float:
        return self.footprint_w * self.layout_h

    def effective_sizing(self) -> TransistorSizing:
        return self.sizing.scaled(self.width_factor)

    def with_vth(self, vth: VthClass) -> "CellDesign":
        return replace(self, vth_class=VthClass(vth))

    def _tech(self) -> Technology:
        if self.tech is None:
            raise InvalidParameterError("cell has no technology attached")
        return self.tech


def preset_cell(method, tech: Technology, vth=VthClass.HIGH) -> CellDesign:
    method = MethodTag(method)
    try:
        row = tech.cell_sizings[method.value]
    except KeyError:
        raise UnsupportedTechnologyError(
            f"no {method.value} sizing for technology {tech.name!r}"
        ) from None
    return CellDesign(
        sizing=TransistorSizing(*row),
        vth_class=VthClass(vth),
        layout_w=tech.layout_w,
        layout_h=tech.layout_h,
        method_tag=method,
        tech=tech,
    )


def upsize(cell: CellDesign, x: float) -> CellDesign:
    """Widen the layout by ``x`` um; transistor widths follow as (1 + total/W)."""
    if x < 0:
        raise InvalidParameterError(f"upsize x={x} is negative")
    if x > cell.layout_w:
        raise InvalidParameterError(f"upsize x={x} exceeds layout width {cell.layout_w}")
    return replace(cell, upsize_x=cell.upsize_x + x)


# --------------------------------------------------------------------------
# electrical view

@dataclass(frozen=True)
class HalfCell:
    """One inverter plus its access device, as effective drive W/L and DIBL.

    Fields may be numpy arrays to evaluate many perturbed cells at once.
    """

    wl_pd: object
    wl_pu: object
    wl_ax: object
    dibl_pd: object
    dibl_pu: object
    dibl_ax: object
    vth_n: object
    vth_p: object


def half_cell(cell: CellDesign, width_scale=1.0, vth_scale=1.0) -> HalfCell:
    tech = cell._tech()
    dev = tech.device
    s = cell.effective_sizing()
    ws = np.asarray(width_scale, dtype=float)
    vs = np.asarray(vth_scale, dtype=float)
    return HalfCell(
        wl_pd=dev.effective_wl(s.w_m12 * ws, s.l_m12),
        wl_pu=dev.effective_wl(s.w_m34 * ws, s.l_m34),
        wl_ax=dev.effective_wl(s.w_m56 * ws, s.l_m56),
        dibl_pd=dev.dibl / s.l_m12,
        dibl_pu=dev.dibl / s.l_m34,
        dibl_ax=dev.dibl / s.l_m56,
        vth_n=tech.vth_n(cell.vth_class) * vs,
        vth_p=tech.vth_p(cell.vth_class) * vs,
    )


def bisect_decreasing(fn, lo, hi, iters: int = 60):
    """Root of an elementwise decreasing function on [lo, hi]; vectorized."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = fn(mid) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    return 0.5 * (lo + hi)


def read_current(dev: DeviceParams, hc: HalfCell, vdd):
    """Bitline discharge current (uA) through the access and pull-down stack.

    The bitline sits at vdd, the wordline at vdd and the pull-down gate at
    vdd; the internal node settles where both devices carry equal current.
    """
    vdd = np.asarray(vdd, dtype=float)

    def i_ax(vq):
        return fast_drain_current(dev, hc.vth_n, hc.wl_ax, vdd - vq, vdd - vq, dibl=hc.dibl_ax)

    def i_pd(vq):
        return fast_drain_current(dev, hc.vth_n, hc.wl_pd, vdd, vq, dibl=hc.dibl_pd)

    shape = np.broadcast(vdd, hc.wl_ax, hc.wl_pd, hc.vth_n).shape
    vq = bisect_decreasing(lambda v: i_ax(v) - i_pd(v), np.zeros(shape), np.broadcast_to(vdd, shape), 50)
    return i_pd(vq)


def delay_from_current(tech: Technology, current):
    """Bitline swing time in ps: C[fF] * dV[V] / I[uA] * 1000."""
    return tech.bitline_cap * tech.sense_swing / np.asarray(current, dtype=float) * 1000.0


def raw_intrinsic_delay(cell: CellDesign, vdd, width_scale=1.0, vth_scale=1.0):
    """Intrinsic read delay without the retention check; vectorized over scales."""
    tech = cell._tech()
    out = delay_from_current(tech, read_current(tech.device, half_cell(cell, width_scale, vth_scale), vdd))
    return float(out) if np.ndim(out) == 0 else out


@functools.lru_cache(maxsize=4096)
def _checked_delay(cell: CellDesign, vdd: float) -> float:
    from .noisemargin import drv, is_operable

    if not is_operable(cell, vdd):
        raise InoperableVoltageError(
            f"vdd={vdd:.4g} V is at or below the retention level {drv(cell):.4g} V of this cell"
        )
    return raw_intrinsic_delay(cell, vdd)


def intrinsic_delay(cell: CellDesign, vdd: float) -> float:
    """Read delay in ps of a cell at the driver end of the wordline."""
    if not vdd > 0:
        raise InoperableVoltageError(f"vdd={vdd} is not positive")
    return _checked_delay(cell, float(vdd))


def raw_leakage_power(cell: CellDesign, vdd, width_scale=1.0, vth_scale=1.0):
    """Hold-state leakage in uW: off pull-down, off pull-up, off access device."""
    tech = cell._tech()
    s = cell.effective_sizing()
    ws = np.asarray(width_scale, dtype=float)
    vs = np.asarray(vth_scale, dtype=float)
    lk = tech.leakage
    vn = tech.vth_n(cell.vth_class) * vs
    vp = tech.vth_p(cell.vth_class) * vs
    total = (
        subthreshold_leakage(lk, vn, s.w_m12 * ws / s.l_m12, vdd, s.l_m12)
        + subthreshold_leakage(lk, vp, s.w_m34 * ws / s.l_m34, vdd, s.l_m34)
        + subthreshold_leakage(lk, vn, s.w_m56 * ws / s.l_m56, vdd, s.l_m56)
    )
    out = np.asarray(vdd, dtype=float) * total * 1e-3
    return float(out) if np.ndim(out) == 0 else out


def cell_leakage_power(cell: CellDesign, tech: Technology | None = None, vdd: float = 0.0) -> float:
    if vdd < 0:
        raise InvalidParameterError("vdd must be non-negative")
    if tech is not None and cell.tech is not tech:
        cell = replace(cell, tech=tech)
    return raw_leakage_power(cell, vdd)


def wordline_load(cell: CellDesign) -> float:
    """Gate capacitance (fF) the cell's two access devices put on the wordline."""
    tech = cell._tech()
    s = cell.effective_sizing()
    lmin_um = tech.l_min * 1e-3
    return 2.0 * tech.device.gate_cap * (s.w_m56 * lmin_um) * (s.l_m56 * lmin_um)


def characterize_presets(tech: Technology, vdd: float | None = None) -> list[dict]:
    """One row per (method, V_th class) with delay, leakage, load and DRV."""
    from .noisemargin import drv

    vdd = tech.table_vdd if vdd is None else vdd
    rows = []
    for method in MethodTag:
        if method.value not in tech.cell_sizings:
            continue
        for vth in VthClass:
            cell = preset_cell(method, tech, vth)
            level = drv(cell, tech)
            rows.append({
                "method": method.value,
                "vth": vth.value,
                "vdd": vdd,
                "delay_ps": raw_intrinsic_delay(cell, vdd) if vdd > level else math.nan,
                "leakage_uw": cell_leakage_power(cell, tech, vdd),
                "wordline_load_ff": wordline_load(cell),
                "drv_v": level,
            })
    return rows
