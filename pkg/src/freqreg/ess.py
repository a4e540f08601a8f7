"""Storage following a regulation signal, and signal-following scores."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .signal import RegulationSignal


class EssError(ValueError):
    pass


@dataclass(frozen=True)
class EssSpec:
    power_capacity_mw: float
    energy_capacity_mwh: float
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    initial_soc: float = 0.5

    def __post_init__(self):
        if not self.power_capacity_mw > 0:
            raise EssError("power_capacity_mw must be positive")
        if not self.energy_capacity_mwh > 0:
            raise EssError("energy_capacity_mwh must be positive")
        for name in ("charge_efficiency", "discharge_efficiency"):
            eta = getattr(self, name)
            if not 0 < eta <= 1:
                raise EssError(f"{name} must be in (0, 1], got {eta}")
        if not 0 <= self.initial_soc <= 1:
            raise EssError(f"initial_soc must be in [0, 1], got {self.initial_soc}")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class SocTrajectory:
    """Per-step simulation result. Power is charging-positive.

    ``soc[t]`` is the state of charge at the end of step ``t``. ``rem_energy_mwh``
    holds grid-side energy applied as an instantaneous correction at the end
    of a step (zero unless a restoration policy acted).
    """

    step_size_hours: float
    energy_capacity_mwh: float
    charge_efficiency: float
    discharge_efficiency: float
    initial_soc: float
    soc: np.ndarray
    actual_power_mw: np.ndarray
    commanded_power_mw: np.ndarray
    base_point_mw: np.ndarray = None
    rem_energy_mwh: np.ndarray = None

    def __post_init__(self):
        n = len(self.soc)
        for name in ("soc", "actual_power_mw", "commanded_power_mw", "base_point_mw", "rem_energy_mwh"):
            val = getattr(self, name)
            arr = np.zeros(n) if val is None else val
            arr = _frozen(arr)
            if arr.shape != (n,):
                raise EssError(f"{name} length {arr.size} != {n}")
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.soc.size

    @property
    def final_soc(self) -> float:
        return float(self.soc[-1]) if len(self) else self.initial_soc

    @property
    def regulation_power_mw(self) -> np.ndarray:
        """Delivered power net of base points: the part that follows the signal."""
        return self.actual_power_mw - self.base_point_mw

    @property
    def charged_mwh(self) -> float:
        return float(np.clip(self.actual_power_mw, 0, None).sum() * self.step_size_hours)

    @property
    def discharged_mwh(self) -> float:
        return float(-np.clip(self.actual_power_mw, None, 0).sum() * self.step_size_hours)

    def soc_change_per_step(self) -> np.ndarray:
        """SoC increments implied by the recurrence, including restoration energy."""
        p = self.actual_power_mw
        e = self.energy_capacity_mwh
        inc = self.step_size_hours * (
            self.charge_efficiency * np.clip(p, 0, None) + np.clip(p, None, 0) / self.discharge_efficiency
        ) / e
        g = self.rem_energy_mwh
        inc = inc + (self.charge_efficiency * np.clip(g, 0, None) + np.clip(g, None, 0) / self.discharge_efficiency) / e
        return inc

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "commanded_mw", "actual_mw", "soc"])
            for i, (c, a, s) in enumerate(
                zip(self.commanded_power_mw.tolist(), self.actual_power_mw.tolist(), self.soc.tolist())
            ):
                w.writerow([i, repr(c), repr(a), repr(s)])


@dataclass(frozen=True)
class PerformanceScore:
    value: float
    method: str = "accuracy"
    subscores: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 <= self.value <= 1:
            raise EssError(f"performance score {self.value} outside [0, 1]")
        if self.method not in ("accuracy", "composite", "ideal"):
            raise EssError(f"unknown score method {self.method!r}")


def simulate_steps(spec: EssSpec, commanded, soc0: float, step_size_hours: float):
    """Run the step kernel from ``soc0``; returns ``(soc, actual_power)``."""
    return kernels.follow(
        np.asarray(commanded, dtype=float),
        float(soc0),
        spec.energy_capacity_mwh,
        spec.power_capacity_mw,
        spec.charge_efficiency,
        spec.discharge_efficiency,
        step_size_hours,
    )


def follow_signal(
    spec: EssSpec,
    signal: RegulationSignal,
    capacity_mw: float,
    base_points_mw=None,
) -> SocTrajectory:
    """Follow ``S_i * capacity + base point`` subject to power and SoC limits.

    Commanded power is clipped to the power rating first, then reduced to the
    largest constant power that keeps SoC inside [0, 1] over the step.
    """
    if capacity_mw < 0 or capacity_mw > spec.power_capacity_mw:
        raise EssError(f"capacity_mw {capacity_mw} outside [0, {spec.power_capacity_mw}]")
    n = len(signal)
    if base_points_mw is None:
        base = np.zeros(n)
    else:
        base = np.asarray(base_points_mw, dtype=float)
        if base.shape != (n,):
            raise EssError(f"base points length {base.size} does not match signal length {n}")
    commanded = signal.values * capacity_mw + base
    soc, actual = simulate_steps(spec, commanded, spec.initial_soc, signal.step_size_hours)
    return SocTrajectory(
        signal.step_size_hours,
        spec.energy_capacity_mwh,
        spec.charge_efficiency,
        spec.discharge_efficiency,
        spec.initial_soc,
        soc,
        actual,
        commanded,
        base,
    )


def _accuracy(output: np.ndarray, target: np.ndarray) -> float:
    denom = np.abs(target).sum()
    err = np.abs(output - target).sum()
    if denom == 0:
        return 1.0 if err == 0 else 0.0
    return float(max(0.0, 1.0 - err / denom))


def _targets(trajectory: SocTrajectory, signal: RegulationSignal, capacity_mw: float):
    if len(trajectory) != len(signal):
        raise EssError(f"trajectory length {len(trajectory)} != signal length {len(signal)}")
    return trajectory.regulation_power_mw, signal.values * capacity_mw


def accuracy_score(trajectory: SocTrajectory, signal: RegulationSignal, capacity_mw: float) -> PerformanceScore:
    """One minus the integrated absolute error relative to the integrated request.

    Base points are removed from the delivered power before scoring. A flat
    request met exactly scores 1.
    """
    out, target = _targets(trajectory, signal, capacity_mw)
    return PerformanceScore(_accuracy(out, target), "accuracy")


def _pearson(a: np.ndarray, b: np.ndarray):
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0:
        return None
    return float((da * db).sum() / denom)


def composite_score(
    trajectory: SocTrajectory,
    signal: RegulationSignal,
    capacity_mw: float,
    max_lag_steps: int = 0,
) -> PerformanceScore:
    """Equal-weight mean of precision, correlation and delay subscores.

    The delay is the lag (0..max_lag_steps) that maximizes the Pearson
    correlation between request and delayed response; precision is the
    accuracy score over the overlap at that lag. A constant request has no
    correlation, so the score falls back to precision alone.
    """
    out, target = _targets(trajectory, signal, capacity_mw)
    n = target.size
    if not 0 <= max_lag_steps < n:
        raise EssError(f"max_lag_steps must be in [0, {n - 1}]")
    if np.all(target == target[0]):
        precision = _accuracy(out, target)
        return PerformanceScore(precision, "composite", {"precision": precision})
    best_lag, best_corr = 0, None
    for lag in range(max_lag_steps + 1):
        r = _pearson(target[: n - lag], out[lag:])
        r = -1.0 if r is None else r
        if best_corr is None or r > best_corr:
            best_lag, best_corr = lag, r
    precision = _accuracy(out[best_lag:], target[: n - best_lag])
    correlation = min(1.0, max(0.0, best_corr))
    delay = 1.0 if max_lag_steps == 0 else 1.0 - best_lag / max_lag_steps
    value = min(1.0, max(0.0, (precision + correlation + delay) / 3.0))
    return PerformanceScore(
        value,
        "composite",
        {"precision": precision, "correlation": correlation, "delay": delay, "lag_steps": best_lag},
    )


def interval_accuracy_scores(
    trajectory: SocTrajectory, signal: RegulationSignal, capacity_mw: float, interval_steps: int
) -> list[float]:
    """Accuracy score over consecutive blocks of ``interval_steps`` steps."""
    out, target = _targets(trajectory, signal, capacity_mw)
    return [
        _accuracy(out[i:i + interval_steps], target[i:i + interval_steps])
        for i in range(0, target.size, interval_steps)
    ]
