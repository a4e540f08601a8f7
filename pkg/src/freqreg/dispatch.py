"""ISO state-of-charge management and deployment rules.

* NYISO real-time dispatch: SoC-dependent base points every 5 minutes with a
  dead-band around 50 %, plus the emergency full-discharge mode.
* CAISO regulation energy management: grid energy that restores a preferred
  SoC set point at each dispatch interval boundary.
* ISO-NE trinary group dispatch and MISO fast-group-first allocation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ess import EssError, EssSpec, SocTrajectory, follow_signal, simulate_steps
from .signal import RegulationSignal


class PolicyError(ValueError):
    pass


class CapacityShortfallError(PolicyError):
    pass


class Policy(str, Enum):
    NONE = "NONE"
    RTD = "RTD"
    REM = "REM"


@dataclass(frozen=True)
class RtdConfig:
    deadband_halfwidth: float = 0.1
    interval_hours: float = 1.0 / 12.0
    gain: float | None = None  # MW per unit SoC deviation; None -> E_cap / interval

    def __post_init__(self):
        if not 0 < self.deadband_halfwidth < 0.5:
            raise PolicyError("deadband_halfwidth must be in (0, 0.5)")
        if not self.interval_hours > 0:
            raise PolicyError("interval_hours must be positive")
        if self.gain is not None and self.gain < 0:
            raise PolicyError("gain must be >= 0")

    def gain_for(self, spec: EssSpec) -> float:
        if self.gain is not None:
            return self.gain
        return spec.energy_capacity_mwh / self.interval_hours


@dataclass(frozen=True)
class RemConfig:
    soc_set_point: float = 0.5
    dispatch_interval_hours: float = 0.25

    def __post_init__(self):
        if not 0 <= self.soc_set_point <= 1:
            raise PolicyError("soc_set_point must be in [0, 1]")
        if not self.dispatch_interval_hours > 0:
            raise PolicyError("dispatch_interval_hours must be positive")


@dataclass(frozen=True)
class DeploymentGroups:
    fast_capacity_mw: float
    slow_capacity_mw: float

    def __post_init__(self):
        if self.fast_capacity_mw < 0 or self.slow_capacity_mw < 0:
            raise PolicyError("group capacities must be >= 0")
        if self.fast_capacity_mw == 0 and self.slow_capacity_mw == 0:
            raise PolicyError("at least one group needs capacity")


def rtd_base_point(
    soc: float,
    offered_capacity_mw: float,
    spec: EssSpec,
    cfg: RtdConfig,
    emergency: bool = False,
) -> tuple[float, float]:
    """Return ``(base_point_mw, available_regulation_mw)``.

    Inside the dead-band (edges included) the unit regulates around a zero
    base point. Outside it, the base point pushes SoC back toward 50 % and
    its magnitude is taken out of the regulation capacity.
    """
    if not 0 <= soc <= 1:
        raise PolicyError(f"soc {soc} outside [0, 1]")
    if offered_capacity_mw > spec.power_capacity_mw:
        raise PolicyError("offered capacity exceeds the power rating")
    if emergency:
        return -spec.power_capacity_mw, 0.0
    dev = soc - 0.5
    if abs(dev) <= cfg.deadband_halfwidth:
        return 0.0, float(offered_capacity_mw)
    base = -cfg.gain_for(spec) * dev
    base = min(spec.power_capacity_mw, max(-spec.power_capacity_mw, base))
    return base, max(0.0, offered_capacity_mw - abs(base))


def rem_energy_dispatch(soc: float, cfg: RemConfig, spec: EssSpec) -> float:
    """Grid-side energy (MWh, charging-positive) that returns SoC to the set point."""
    if not 0 <= soc <= 1:
        raise PolicyError(f"soc {soc} outside [0, 1]")
    deficit = (cfg.soc_set_point - soc) * spec.energy_capacity_mwh
    limit = spec.power_capacity_mw * cfg.dispatch_interval_hours
    if deficit > 0:
        return min(deficit / spec.charge_efficiency, limit)
    if deficit < 0:
        return max(deficit * spec.discharge_efficiency, -limit)
    return 0.0


def ent_group_dispatch(trinary_value: int, units) -> list[float]:
    """Every unit in the trinary group runs at full rated power in the same direction."""
    if trinary_value not in (-1, 0, 1):
        raise PolicyError(f"trinary value must be -1, 0 or 1, got {trinary_value}")
    return [float(trinary_value * u.power_capacity_mw) for u in units]


def _exact_split(required: float, fast: float, fast_cap: float) -> tuple[float, float]:
    """``(fast, required - fast)`` nudged by an ulp where needed so the parts sum exactly."""
    slow = required - fast
    for _ in range(8):
        total = fast + slow
        if total == required:
            break
        toward = math.inf if total < required else -math.inf
        moved = math.nextafter(fast, toward)
        if abs(moved) <= fast_cap:
            fast, slow = moved, required - moved
        else:
            slow = math.nextafter(slow, toward)
    return fast, slow


def agc_enhanced_allocation(
    required_mw: float,
    groups: DeploymentGroups,
    previous: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Split a signed requirement into ``(fast_mw, slow_mw)``, fast group first.

    Without ``previous`` the allocation is built up from zero. With the
    previous interval's allocation, movement away from zero is taken by the
    fast group until it saturates, and movement toward zero is taken off the
    fast group before the slow group is touched. A sign reversal fully
    un-deploys both groups before deploying in the new direction.
    """
    total = groups.fast_capacity_mw + groups.slow_capacity_mw
    if abs(required_mw) > total:
        raise CapacityShortfallError(
            f"requirement {required_mw} MW exceeds deployable {total} MW by {abs(required_mw) - total} MW"
        )
    sign = math.copysign(1.0, required_mw)
    fast_prev, slow_prev = previous if previous is not None else (0.0, 0.0)
    current = fast_prev + slow_prev
    if current == 0 or current * required_mw < 0 or abs(required_mw) >= abs(current):
        if current * required_mw < 0:
            fast_prev = slow_prev = 0.0
        room = groups.fast_capacity_mw - abs(fast_prev)
        extra = abs(required_mw) - abs(fast_prev) - abs(slow_prev)
        fast = sign * (abs(fast_prev) + min(max(room, 0.0), extra))
    else:
        release = abs(current) - abs(required_mw)
        fast = sign * max(0.0, abs(fast_prev) - release)
    if abs(required_mw - fast) > groups.slow_capacity_mw:
        # previous allocation was infeasible for these groups; rebuild from zero
        fast = sign * min(abs(required_mw), groups.fast_capacity_mw)
    return _exact_split(required_mw, fast, groups.fast_capacity_mw)


@dataclass(frozen=True)
class PolicyEvent:
    step: int
    policy: str
    action: str
    base_point_mw: float
    energy_mwh: float
    soc_before: float
    soc_after: float


@dataclass(frozen=True)
class PolicyRun:
    trajectory: SocTrajectory
    events: list = field(default_factory=list)


EVENT_COLUMNS = ["step", "policy", "action", "base_point_mw", "energy_mwh", "soc_before", "soc_after"]


def write_event_log(events, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for e in events:
            w.writerow([e.step, e.policy, e.action, repr(e.base_point_mw), repr(e.energy_mwh),
                        repr(e.soc_before), repr(e.soc_after)])


def _interval_steps(step_size_hours: float, interval_hours: float) -> int:
    k = interval_hours / step_size_hours
    if k < 1 or abs(k - round(k)) > 1e-9 * k:
        raise PolicyError(f"policy interval {interval_hours} h is not a whole number of steps")
    return int(round(k))


def _apply_grid_energy(soc: float, grid_mwh: float, spec: EssSpec) -> float:
    if grid_mwh > 0:
        soc = soc + spec.charge_efficiency * grid_mwh / spec.energy_capacity_mwh
    elif grid_mwh < 0:
        soc = soc + grid_mwh / spec.discharge_efficiency / spec.energy_capacity_mwh
    return min(1.0, max(0.0, soc))


def _run_rtd(spec, signal, capacity_mw, cfg: RtdConfig, emergency):
    k = _interval_steps(signal.step_size_hours, cfg.interval_hours)
    n = len(signal)
    n_intervals = -(-n // k)
    if emergency is None:
        flags = [False] * n_intervals
    else:
        flags = [bool(f) for f in emergency]
        if len(flags) != n_intervals:
            raise PolicyError(f"need {n_intervals} emergency flags (one per RTD interval), got {len(flags)}")
    soc = spec.initial_soc
    soc_out, p_out, cmd_out, base_out = [], [], [], []
    events = []
    for j in range(n_intervals):
        lo, hi = j * k, min(n, (j + 1) * k)
        base, avail = rtd_base_point(soc, capacity_mw, spec, cfg, flags[j])
        cmd = signal.values[lo:hi] * avail + base
        s, p = simulate_steps(spec, cmd, soc, signal.step_size_hours)
        if flags[j]:
            action = "emergency_discharge"
        elif base == 0.0:
            action = "deadband"
        else:
            action = "base_point"
        events.append(PolicyEvent(lo, Policy.RTD.value, action, base, base * (hi - lo) * signal.step_size_hours,
                                  soc, float(s[-1])))
        soc = float(s[-1])
        soc_out.append(s)
        p_out.append(p)
        cmd_out.append(cmd)
        base_out.append(np.full(hi - lo, base))
    traj = SocTrajectory(
        signal.step_size_hours, spec.energy_capacity_mwh, spec.charge_efficiency, spec.discharge_efficiency,
        spec.initial_soc, np.concatenate(soc_out), np.concatenate(p_out), np.concatenate(cmd_out),
        np.concatenate(base_out),
    )
    return PolicyRun(traj, events)


def _run_rem(spec, signal, capacity_mw, cfg: RemConfig):
    k = _interval_steps(signal.step_size_hours, cfg.dispatch_interval_hours)
    n = len(signal)
    soc = spec.initial_soc
    cmd_all = signal.values * capacity_mw
    soc_out, p_out = [], []
    rem = np.zeros(n)
    events = []
    for lo in range(0, n, k):
        hi = min(n, lo + k)
        s, p = simulate_steps(spec, cmd_all[lo:hi], soc, signal.step_size_hours)
        before = float(s[-1])
        grid = rem_energy_dispatch(before, cfg, spec)
        after = _apply_grid_energy(before, grid, spec) if grid else before
        s = s.copy()
        s[-1] = after
        rem[hi - 1] = grid
        events.append(PolicyEvent(hi - 1, Policy.REM.value, "rem_dispatch" if grid else "at_set_point",
                                  0.0, grid, before, after))
        soc = after
        soc_out.append(s)
        p_out.append(p)
    traj = SocTrajectory(
        signal.step_size_hours, spec.energy_capacity_mwh, spec.charge_efficiency, spec.discharge_efficiency,
        spec.initial_soc, np.concatenate(soc_out), np.concatenate(p_out), cmd_all, None, rem,
    )
    return PolicyRun(traj, events)


def run_policy_simulation(
    spec: EssSpec,
    signal: RegulationSignal,
    policy: Policy | str = Policy.NONE,
    cfg: RtdConfig | RemConfig | None = None,
    capacity_mw: float | None = None,
    emergency=None,
) -> PolicyRun:
    """Follow ``signal`` with the chosen SoC-management policy layered on top.

    ``capacity_mw`` defaults to the unit's power rating. ``emergency`` gives
    one flag per RTD interval and is only used by the RTD policy.
    """
    policy = Policy(str(policy.value if isinstance(policy, Policy) else policy).upper())
    if capacity_mw is None:
        capacity_mw = spec.power_capacity_mw
    if capacity_mw > spec.power_capacity_mw:
        raise EssError("capacity_mw exceeds the power rating")
    if policy is Policy.NONE:
        return PolicyRun(follow_signal(spec, signal, capacity_mw), [])
    if policy is Policy.RTD:
        cfg = cfg if cfg is not None else RtdConfig()
        if not isinstance(cfg, RtdConfig):
            raise PolicyError("RTD policy needs an RtdConfig")
        return _run_rtd(spec, signal, capacity_mw, cfg, emergency)
    cfg = cfg if cfg is not None else RemConfig()
    if not isinstance(cfg, RemConfig):
        raise PolicyError("REM policy needs a RemConfig")
    return _run_rem(spec, signal, capacity_mw, cfg)
