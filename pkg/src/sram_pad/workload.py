"""Rank sizing methods under hot and cold cache workload profiles."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .arraymodel import PadBreakdown, WorkloadProfile, row_area, row_leakage, worst_case_delay
from .cellmodel import MethodTag
from .errors import ConfigError, InfeasibleDesignError, InvalidParameterError
from .noisemargin import drv
from .optimizer import OptimizerConfig, optimize
from .techmodel import Technology, find_config, read_yaml, _check_keys


@dataclass(frozen=True)
class MemoryConfig:
    tech: Technology
    capacity: int = 32768  # bits
    cells_per_row: int = 256
    vdd_active: float = 0.5
    vdd_standby: float | None = None  # None: each design retains at its own DRV

    def __post_init__(self):
        if self.cells_per_row < 1 or self.capacity % self.cells_per_row:
            raise InvalidParameterError("capacity must be a multiple of cells_per_row")
        if self.vdd_standby is not None and self.vdd_standby > self.vdd_active:
            raise InvalidParameterError("vdd_standby must not exceed vdd_active")

    @property
    def rows(self) -> int:
        return self.capacity // self.cells_per_row


@dataclass(frozen=True)
class MethodEvaluation:
    """Fixed hybrid plan of one method with its active and standby power."""

    method: MethodTag
    plan_text: str
    active_power: float  # uW, whole memory
    standby_power: float  # uW, whole memory
    vdd_standby: float
    area: float  # um^2, whole memory
    delay: float  # ps
    critical_cell_index: int

    def power(self, idle_fraction: float) -> float:
        return (1.0 - idle_fraction) * self.active_power + idle_fraction * self.standby_power

    def breakdown(self, idle_fraction: float) -> PadBreakdown:
        return PadBreakdown.of(self.power(idle_fraction), self.area, self.delay, self.critical_cell_index)


@dataclass(frozen=True)
class ScenarioResult:
    idle_fraction: float
    breakdowns: dict  # method -> PadBreakdown
    ranking: tuple
    winner: MethodTag
    evaluations: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class IdleSweep:
    grid: tuple
    winners: tuple
    crossovers: tuple  # (idle_lo, idle_hi, winner_before, winner_after)


def characterize_method(mem: MemoryConfig, workload: WorkloadProfile, method) -> MethodEvaluation:
    """Optimize the hybrid plan for active operation, then price both modes."""
    return _characterize(mem, workload.c_load, workload.t_cycle, workload.alpha, MethodTag(method))


_CACHE: dict = {}


def _characterize(mem, c_load, t_cycle, alpha, method) -> MethodEvaluation:
    key = (id(mem.tech), mem.capacity, mem.cells_per_row, mem.vdd_active, mem.vdd_standby,
           c_load, t_cycle, alpha, method)
    if key in _CACHE:
        return _CACHE[key]
    tech = mem.tech
    active = WorkloadProfile(c_load, t_cycle, alpha, mem.vdd_active, 0.0)
    cfg = OptimizerConfig(mem.cells_per_row, active, vdd=mem.vdd_active, method=method)
    res = optimize(cfg, tech)
    plan = res.plan
    cells = plan.cells(tech)
    levels = [drv(c, tech) for s, c in zip(plan.segments, cells) if s.count]
    design_drv = max(levels)
    if mem.vdd_standby is None:
        v_sb = design_drv
    else:
        if design_drv > mem.vdd_standby:
            raise InfeasibleDesignError(
                f"{method.value}: retention level {design_drv:.4g} V exceeds standby supply {mem.vdd_standby:.4g} V"
            )
        v_sb = mem.vdd_standby
    if v_sb > mem.vdd_active:
        raise InfeasibleDesignError(f"{method.value}: retention level above the active supply")
    rows = mem.rows
    idx, delay = worst_case_delay(plan, tech, mem.vdd_active)
    ev = MethodEvaluation(
        method=method,
        plan_text=plan.to_text(),
        active_power=rows * (active.dynamic_power() + row_leakage(plan, tech, mem.vdd_active)),
        standby_power=rows * row_leakage(plan, tech, v_sb),
        vdd_standby=v_sb,
        area=rows * row_area(plan, tech),
        delay=delay,
        critical_cell_index=idx,
    )
    _CACHE[key] = ev
    return ev


def _evaluate_all(mem, workload, methods, threads):
    methods = [MethodTag(m) for m in methods]
    if not methods:
        raise InvalidParameterError("methods list is empty")
    if threads == 1:
        evs = [characterize_method(mem, workload, m) for m in methods]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as ex:
            evs = list(ex.map(lambda m: characterize_method(mem, workload, m), methods))
    return dict(zip(methods, evs))


def _rank(evaluations: dict, idle: float) -> ScenarioResult:
    bds = {m: ev.breakdown(idle) for m, ev in evaluations.items()}
    order = list(evaluations)
    ranking = tuple(sorted(order, key=lambda m: (bds[m].pad, order.index(m))))
    return ScenarioResult(idle, bds, ranking, ranking[0], evaluations)


def evaluate_scenario(mem: MemoryConfig, workload: WorkloadProfile, methods=tuple(MethodTag),
                      threads: int = 1) -> ScenarioResult:
    """PAD of each method at the workload's idle fraction, ranked ascending."""
    return _rank(_evaluate_all(mem, workload, methods, threads), workload.idle_fraction)


def sweep_idle_fraction(mem: MemoryConfig, workload: WorkloadProfile, grid, methods=tuple(MethodTag),
                        threads: int = 1) -> IdleSweep:
    """Winner at each idle fraction and the intervals where it changes."""
    grid = tuple(float(g) for g in grid)
    if not grid or any(not 0.0 <= g <= 1.0 for g in grid):
        raise InvalidParameterError("idle grid must be nonempty and inside [0, 1]")
    evs = _evaluate_all(mem, workload, methods, threads)
    winners = tuple(_rank(evs, g).winner for g in grid)
    cross = tuple(
        (grid[i], grid[i + 1], winners[i], winners[i + 1])
        for i in range(len(grid) - 1)
        if winners[i] is not winners[i + 1]
    )
    return IdleSweep(grid, winners, cross)


def scenario_rows(result: ScenarioResult):
    for rank, m in enumerate(result.ranking, start=1):
        bd = result.breakdowns[m]
        yield (m.value, bd.power, bd.area, bd.delay, bd.pad, rank)


_PROFILE_KEYS = {"c_load", "t_cycle", "alpha", "vdd", "idle_fraction"}


def load_workloads(config_dir=None) -> dict:
    data = read_yaml(find_config("workloads.yaml", config_dir))
    out = {}
    for name, body in data.items():
        if not isinstance(body, dict):
            raise ConfigError(f"workload {name!r} must be a mapping")
        _check_keys(f"workloads.{name}", body, _PROFILE_KEYS)
        try:
            out[name] = WorkloadProfile(name=name, **{k: float(v) for k, v in body.items()})
        except TypeError as exc:
            raise ConfigError(f"workload {name!r}: {exc}") from None
    return out


def load_workload(name: str, config_dir=None) -> WorkloadProfile:
    profiles = load_workloads(config_dir)
    if name not in profiles:
        raise ConfigError(f"unknown workload profile {name!r}; have {sorted(profiles)}")
    return profiles[name]


def with_idle(workload: WorkloadProfile, idle: float) -> WorkloadProfile:
    return replace(workload, idle_fraction=idle)


__all__ = [
    "MemoryConfig", "MethodEvaluation", "ScenarioResult", "IdleSweep", "characterize_method",
    "evaluate_scenario", "sweep_idle_fraction", "scenario_rows", "load_workloads", "load_workload",
    "with_idle",
]
