"""Technology constants and a compact MOSFET model.

Units used throughout the package: lengths in um (transistor sizes in
multiples of ``l_min``), time in ps, power in uW, voltage in V, drive
current in uA, leakage current in nA, capacitance in fF.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
import os

import numpy as np
import yaml

from .errors import ConfigError, InvalidParameterError, UnsupportedTechnologyError

THERMAL_VOLTAGE = 0.02585  # kT/q at 300 K
CONFIG_ENV_VAR = "SRAM_PAD_CONFIG_DIR"
PRESET_DIR = Path(__file__).parent / "presets"


class VthClass(str, enum.Enum):
    HIGH = "High"
    LOW = "Low"

    @property
    def letter(self) -> str:
        return self.value[0]


@dataclass(frozen=True)
class DeviceParams:
    alpha_sat: float
    k_drive: float  # uA / V^alpha per unit W/L (NMOS)
    lambda_: float = 0.0  # channel-length modulation, 1/V
    vdsat_coeff: float = 0.6  # Vdsat = vdsat_coeff * Vov^(alpha/2)
    subthreshold_slope: float = 90.0  # mV/decade
    dibl: float = 0.0  # V/V at L = l_min, scales as 1/L
    width_offset: float = 0.0  # drawn-to-effective width loss, multiples of l_min
    pmos_strength: float = 0.5  # k_drive ratio PMOS/NMOS
    gate_cap: float = 10.0  # fF/um^2

    def __post_init__(self):
        if not 1.0 <= self.alpha_sat <= 2.0:
            raise InvalidParameterError(f"alpha_sat={self.alpha_sat} outside [1, 2]")
        if self.k_drive <= 0:
            raise InvalidParameterError("k_drive must be positive")
        if self.lambda_ < 0:
            raise InvalidParameterError("lambda must be non-negative")
        if self.subthreshold_slope <= 0:
            raise InvalidParameterError("subthreshold_slope must be positive")
        if self.width_offset < 0 or self.width_offset >= 1.0:
            raise InvalidParameterError("width_offset must lie in [0, 1) x l_min")

    def pmos(self) -> "DeviceParams":
        return DeviceParams(
            alpha_sat=self.alpha_sat,
            k_drive=self.k_drive * self.pmos_strength,
            lambda_=self.lambda_,
            vdsat_coeff=self.vdsat_coeff,
            subthreshold_slope=self.subthreshold_slope,
            dibl=self.dibl,
            width_offset=self.width_offset,
            pmos_strength=1.0,
            gate_cap=self.gate_cap,
        )

    def effective_wl(self, w, l):
        """Drive W/L after the narrow-width offset; w and l in multiples of l_min."""
        return (np.asarray(w, dtype=float) - self.width_offset) / np.asarray(l, dtype=float)

    def dibl_for_length(self, l):
        return self.dibl / np.asarray(l, dtype=float)


@dataclass(frozen=True)
class LeakageParams:
    i0: float  # nA per unit W/L
    subthreshold_slope: float = 90.0  # mV/decade
    dibl: float = 0.0

    def __post_init__(self):
        if self.i0 <= 0:
            raise InvalidParameterError("i0 must be positive")
        if self.subthreshold_slope <= 0:
            raise InvalidParameterError("subthreshold_slope must be positive")


@dataclass(frozen=True, eq=False)
class Technology:
    """Immutable node description. Compared and hashed by identity."""

    name: str
    l_min: float  # nm
    k_wl: float  # ps/um^2
    vdd_nominal: float
    vth: dict  # VthClass -> (vth_n, vth_p)
    device: DeviceParams
    leakage: LeakageParams
    thermal_noise_floor: float = 0.026
    variation_margin: float = 0.0
    guard_band: float = 0.100
    layout_w: float = 0.80  # um
    layout_h: float = 0.32  # um
    bitline_cap: float = 50.0  # fF
    sense_swing: float = 0.1  # V
    table_vdd: float = 0.5
    snm_sweep_vdd: float = 0.2
    snm_min: float = 0.059
    cell_sizings: dict = field(default_factory=dict)  # method name -> 6-tuple

    def __post_init__(self):
        if self.l_min <= 0 or self.k_wl <= 0 or self.vdd_nominal <= 0:
            raise InvalidParameterError("l_min, k_wl and vdd_nominal must be positive")
        if set(self.vth) != {VthClass.HIGH, VthClass.LOW}:
            raise InvalidParameterError("vth must define exactly High and Low classes")
        hn, hp = self.vth[VthClass.HIGH]
        ln_, lp = self.vth[VthClass.LOW]
        if not (hn > ln_ and hp > lp):
            raise InvalidParameterError("High-Vth thresholds must exceed Low-Vth thresholds")
        for name in ("thermal_noise_floor", "guard_band", "variation_margin"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative")

    def vth_n(self, cls: VthClass) -> float:
        return self.vth[VthClass(cls)][0]

    def vth_p(self, cls: VthClass) -> float:
        return self.vth[VthClass(cls)][1]

    def retention_margins(self) -> float:
        return self.variation_margin + self.guard_band


def drain_current(dev: DeviceParams, vth, w_over_l, vgs, vds, dibl=0.0):
    """Drain current in uA; accepts scalars or numpy arrays.

    Alpha-power saturation current above a stitch overdrive, exponential
    below it. The stitch overdrive ``alpha * m`` (m = S / ln 10) is the point
    where the log-slopes of both laws coincide, so the current is C1 in vgs.
    The drain dependence ``1 - exp(-vds / vd)`` is shared by both regimes,
    with ``vd`` growing from kT/q toward Vdsat/2 in strong inversion.
    """
    w_over_l = np.asarray(w_over_l, dtype=float)
    if np.any(w_over_l < 0):
        raise InvalidParameterError("w_over_l must be non-negative")
    vds = np.asarray(vds, dtype=float)
    if np.any(vds < 0):
        raise InvalidParameterError("vds must be non-negative; orient source and drain")
    out = np.asarray(fast_drain_current(dev, vth, w_over_l, np.asarray(vgs, dtype=float), vds, dibl))
    return float(out) if out.ndim == 0 else out


def fast_drain_current(dev: DeviceParams, vth, w_over_l, vgs, vds, dibl=0.0):
    """``drain_current`` without argument checks, for inner solver loops."""
    a = dev.alpha_sat
    m = dev.subthreshold_slope * 1e-3 / math.log(10.0)
    vov0 = a * m
    vov = vgs - vth + dibl * vds
    strong = np.maximum(vov, vov0) ** a
    weak = vov0**a * np.exp(np.minimum(vov - vov0, 0.0) / m)
    i_sat = dev.k_drive * w_over_l * np.where(vov >= vov0, strong, weak)
    vd = THERMAL_VOLTAGE + (0.5 * dev.vdsat_coeff) * np.maximum(vov, 0.0) ** (a / 2)
    return i_sat * -np.expm1(-vds / vd) * (1.0 + dev.lambda_ * vds)


def leakage_current(tech: Technology, vth_class: VthClass, w_over_l, vdd, polarity: str = "n", length=1.0):
    """Off-state subthreshold leakage in nA for a device with vgs = 0, vds = vdd.

    ``length`` (multiples of l_min) divides the DIBL coefficient, so long
    devices see less drain-induced barrier lowering.
    """
    vdd_arr = np.asarray(vdd, dtype=float)
    if np.any(vdd_arr < 0):
        raise InvalidParameterError("vdd must be non-negative")
    if np.any(np.asarray(w_over_l) < 0):
        raise InvalidParameterError("w_over_l must be non-negative")
    vth = tech.vth_n(vth_class) if polarity == "n" else tech.vth_p(vth_class)
    return subthreshold_leakage(tech.leakage, vth, w_over_l, vdd_arr, length)


def subthreshold_leakage(lk: LeakageParams, vth, w_over_l, vdd, length=1.0):
    """Leakage in nA for an explicit threshold; vectorized over all arguments."""
    vdd = np.asarray(vdd, dtype=float)
    s = lk.subthreshold_slope * 1e-3
    out = (
        lk.i0
        * np.asarray(w_over_l, dtype=float)
        * 10.0 ** ((-np.asarray(vth, dtype=float) + lk.dibl / np.asarray(length, dtype=float) * vdd) / s)
        * -np.expm1(-vdd / THERMAL_VOLTAGE)
    )
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# configuration loading

def _check_keys(section: str, data: dict, allowed) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


def _build(cls, section, data, renames=None):
    renames = renames or {}
    allowed = {renames.get(f.name, f.name) for f in fields(cls)}
    _check_keys(section, data, allowed)
    inverse = {v: k for k, v in renames.items()}
    try:
        return cls(**{inverse.get(k, k): v for k, v in data.items()})
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def technology_from_dict(data: dict) -> Technology:
    data = dict(data)
    top = ({f.name for f in fields(Technology)} - {"cell_sizings"}) | {"layout", "bitline", "operating"}
    _check_keys("technology", data, top)
    try:
        device = _build(DeviceParams, "device", data.pop("device"), {"lambda_": "lambda"})
        leakage = _build(LeakageParams, "leakage", data.pop("leakage"))
        vth_raw = data.pop("vth")
    except KeyError as exc:
        raise ConfigError(f"missing section {exc}") from None
    _check_keys("vth", vth_raw, {"High", "Low"})
    vth = {}
    for key, pair in vth_raw.items():
        _check_keys(f"vth.{key}", pair, {"n", "p"})
        vth[VthClass(key)] = (float(pair["n"]), float(pair["p"]))
    flat = {}
    for section, mapping in (
        ("layout", {"w": "layout_w", "h": "layout_h"}),
        ("bitline", {"capacitance": "bitline_cap", "sense_swing": "sense_swing"}),
        ("operating", {"table_vdd": "table_vdd", "snm_sweep_vdd": "snm_sweep_vdd", "snm_min": "snm_min"}),
    ):
        sub = data.pop(section, {}) or {}
        _check_keys(section, sub, mapping)
        flat.update({mapping[k]: v for k, v in sub.items()})
    data.update(flat)
    try:
        return Technology(vth=vth, device=device, leakage=leakage, **data)
    except TypeError as exc:
        raise ConfigError(f"technology: {exc}") from None


def config_dirs(config_dir=None) -> list[Path]:
    """Search order: explicit directory, then $SRAM_PAD_CONFIG_DIR, then built-ins."""
    dirs = []
    if config_dir is not None:
        dirs.append(Path(config_dir))
    env = os.environ.get(CONFIG_ENV_VAR)
    if env:
        dirs.append(Path(env))
    dirs.append(PRESET_DIR)
    return dirs


def find_config(filename: str, config_dir=None) -> Path:
    for d in config_dirs(config_dir):
        p = d / filename
        if p.is_file():
            return p
    raise ConfigError(f"config file {filename!r} not found in {[str(d) for d in config_dirs(config_dir)]}")


def read_yaml(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return data


_TECH_CACHE: dict = {}
METHOD_NAMES = ("Conventional", "DrvBased", "ReadBased", "WriteBased")


def _parse_sizings(tech_name: str, table: dict) -> dict:
    _check_keys(f"cells.{tech_name}", table, METHOD_NAMES)
    out = {}
    for method, row in table.items():
        if not isinstance(row, (list, tuple)) or len(row) != 6:
            raise ConfigError(f"cells.{tech_name}.{method}: expected six numbers")
        out[method] = tuple(float(v) for v in row)
    return out


def load_technology(name_or_path: str, config_dir=None) -> Technology:
    """Load a technology preset by name (``ptm32``) or from a YAML file path."""
    p = Path(name_or_path)
    if p.suffix in (".yaml", ".yml") and p.is_file():
        path = p
    else:
        try:
            path = find_config(f"{name_or_path}.yaml", config_dir)
        except ConfigError:
            raise UnsupportedTechnologyError(f"unknown technology {name_or_path!r}") from None
    key = (str(path.resolve()), path.stat().st_mtime_ns)
    if key not in _TECH_CACHE:
        tech = technology_from_dict(read_yaml(path))
        dirs = [path.parent] + config_dirs(config_dir)
        for d in dirs:
            cells = d / "cells.yaml"
            if cells.is_file():
                table = read_yaml(cells)
                if tech.name in table:
                    tech = replace(tech, cell_sizings=_parse_sizings(tech.name, table[tech.name]))
                    break
        _TECH_CACHE[key] = tech
    return _TECH_CACHE[key]
