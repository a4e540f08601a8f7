"""Scenario commands: signal analysis, simulation, settlement, market comparison.

Each ``cmd_*`` takes a :class:`ScenarioConfig`, writes CSV outputs plus a
``run_manifest.json`` into the output directory, and returns the in-memory
results for programmatic use.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .dispatch import (
    DeploymentGroups,
    Policy,
    PolicyRun,
    agc_enhanced_allocation,
    run_policy_simulation,
    write_event_log,
)
from .ess import (
    PerformanceScore,
    SocTrajectory,
    accuracy_score,
    composite_score,
    follow_signal,
    interval_accuracy_scores,
)
from .market_data import (
    PriceSeries,
    QuantileSummary,
    boxplot_stats,
    load_prices,
    payment_distribution,
    write_summary_csv,
)
from .scenario import ScenarioConfig
from .settlement import (
    MISO_INTERVALS_PER_HOUR,
    AwardRecord,
    Market,
    SettlementError,
    caiso_energy_settlement,
    settle,
    write_settlement_report,
)
from .signal import (
    RegulationSignal,
    hourly_analytics,
    read_signal_csv,
    split_fast_slow,
    synthesize_ace,
    trinary_quantize,
    write_signal_csv,
)

log = logging.getLogger(__name__)


def _num(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def build_signals(cfg: ScenarioConfig, hours: int | None = None) -> dict[str, RegulationSignal]:
    """ACE (synthesized or read) and its slow, fast and trinary derivatives."""
    s = cfg.signal
    if s.source == "csv":
        ace = read_signal_csv(s.path, s.step_size_hours)
    else:
        ace = synthesize_ace(cfg.seed, hours or s.hours, s.step_size_hours, s.mean_reversion,
                             s.volatility, s.ramp_time_constant)
    slow, fast = split_fast_slow(ace, s.smoothing_time_constant, s.zero_mean_window)
    tri = trinary_quantize(fast, s.enter_threshold, s.exit_threshold)
    return {"ace": ace, "slow": slow, "fast": fast, "trinary": tri}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: ScenarioConfig, command: str, out: Path, outputs: list[str]) -> Path:
    manifest = {
        "command": command,
        "seed": cfg.seed,
        "config_file": None if cfg.source_file is None else str(cfg.source_file),
        "config": cfg.as_dict(),
        "versions": {
            "freqreg": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "kernel_backend": kernels.BACKEND,
        "outputs": {name: _sha256(out / name) for name in sorted(outputs)},
    }
    path = out / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _prepare_out(cfg: ScenarioConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- analyze-signal

@dataclass
class SignalReport:
    signals: dict
    hourly: dict  # kind -> list[SignalAnalytics]
    summaries: list  # (metric, QuantileSummary)


def cmd_analyze_signal(cfg: ScenarioConfig) -> SignalReport:
    out = _prepare_out(cfg)
    signals = build_signals(cfg)
    hourly = {k: hourly_analytics(v) for k, v in signals.items()}
    outputs = ["hourly_analytics.csv", "summary.csv"]
    with open(out / "hourly_analytics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal", "hour", "mileage", "energy_requirement_mwh_per_mw", "energy_balance", "balance_flag"])
        for kind, rows in hourly.items():
            start = signals[kind].start_hour
            for h, a in enumerate(rows):
                if math.isnan(a.energy_balance):
                    flag = "undefined"
                else:
                    flag = "ok" if a.balance_in_range else "out_of_range"
                w.writerow([kind, start + h, _num(a.mileage), _num(a.energy_requirement_mwh_per_mw),
                            _num(a.energy_balance), flag])
    summaries = []
    for kind, rows in hourly.items():
        for metric in ("mileage", "energy_requirement_mwh_per_mw", "energy_balance"):
            vals = np.array([getattr(a, metric) for a in rows])
            vals = vals[~np.isnan(vals)]
            if vals.size:
                summaries.append((f"{kind}.{metric}", boxplot_stats(vals, exclude_outliers=True)))
    write_summary_csv(summaries, out / "summary.csv")
    if cfg.signal.export:
        for kind, sig in signals.items():
            write_signal_csv(sig, out / f"signal_{kind}.csv")
            outputs.append(f"signal_{kind}.csv")
    write_manifest(cfg, "analyze-signal", out, outputs)
    return SignalReport(signals, hourly, summaries)


# ---------------------------------------------------------------- simulate

@dataclass
class SimulationReport:
    signals: dict
    followed: RegulationSignal
    run: PolicyRun
    score: PerformanceScore
    hourly_scores: list
    interval_scores: list


def _agc_enhanced_run(cfg: ScenarioConfig, ace: RegulationSignal) -> tuple[RegulationSignal, PolicyRun]:
    """Storage as the fast group; the slow group absorbs what the ESS cannot."""
    groups = DeploymentGroups(cfg.capacity_mw, cfg.slow_group_mw)
    total = groups.fast_capacity_mw + groups.slow_capacity_mw
    fast = np.empty(len(ace))
    prev = None
    for i, s in enumerate(ace.values.tolist()):
        prev = agc_enhanced_allocation(s * total, groups, prev)
        fast[i] = prev[0]
    share = fast / cfg.capacity_mw if cfg.capacity_mw > 0 else np.zeros(len(ace))
    followed = ace.with_values(np.clip(share, -1.0, 1.0))
    return followed, PolicyRun(follow_signal(cfg.ess, followed, cfg.capacity_mw), [])


def _score(cfg: ScenarioConfig, traj: SocTrajectory, sig: RegulationSignal) -> PerformanceScore:
    if cfg.market is Market.PJM:
        lag = min(cfg.composite_max_lag_steps, len(sig) - 1)
        return composite_score(traj, sig, cfg.capacity_mw, lag)
    return accuracy_score(traj, sig, cfg.capacity_mw)


def _hour_slice(traj: SocTrajectory, lo: int, hi: int) -> SocTrajectory:
    return SocTrajectory(
        traj.step_size_hours, traj.energy_capacity_mwh, traj.charge_efficiency, traj.discharge_efficiency,
        traj.initial_soc if lo == 0 else float(traj.soc[lo - 1]),
        traj.soc[lo:hi], traj.actual_power_mw[lo:hi], traj.commanded_power_mw[lo:hi],
        traj.base_point_mw[lo:hi], traj.rem_energy_mwh[lo:hi],
    )


def simulate(cfg: ScenarioConfig) -> SimulationReport:
    signals = build_signals(cfg)
    followed = signals[cfg.follow]
    if cfg.policy == "agc-enhancement":
        followed, run = _agc_enhanced_run(cfg, followed)
    else:
        policy = {"rtd": Policy.RTD, "rem": Policy.REM}.get(cfg.policy, Policy.NONE)
        pcfg = cfg.rtd if policy is Policy.RTD else cfg.rem if policy is Policy.REM else None
        emergency = None
        if policy is Policy.RTD:
            k = round(cfg.rtd.interval_hours / followed.step_size_hours)
            n_int = -(-len(followed) // k)
            bad = [i for i in cfg.emergency_intervals if not 0 <= i < n_int]
            if bad:
                raise SettlementError(f"emergency interval indices {bad} outside 0..{n_int - 1}")
            emergency = [i in set(cfg.emergency_intervals) for i in range(n_int)]
        run = run_policy_simulation(cfg.ess, followed, policy, pcfg, cfg.capacity_mw, emergency)
    traj = run.trajectory
    score = _score(cfg, traj, followed)
    n = followed.steps_per_hour
    hourly = []
    for h, seg in enumerate(followed.hours()):
        hourly.append(_score(cfg, _hour_slice(traj, h * n, (h + 1) * n), seg))
    per_interval = interval_accuracy_scores(traj, followed, cfg.capacity_mw, n // MISO_INTERVALS_PER_HOUR) \
        if n % MISO_INTERVALS_PER_HOUR == 0 else []
    return SimulationReport(signals, followed, run, score, hourly, per_interval)


def cmd_simulate(cfg: ScenarioConfig) -> SimulationReport:
    out = _prepare_out(cfg)
    rep = simulate(cfg)
    rep.run.trajectory.to_csv(out / "trajectory.csv")
    write_event_log(rep.run.events, out / "events.csv")
    fa = hourly_analytics(rep.followed)
    with open(out / "performance.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "method", "score", "signal_mileage", "energy_requirement_mwh_per_mw", "end_soc"])
        n = rep.followed.steps_per_hour
        for h, (sc, a) in enumerate(zip(rep.hourly_scores, fa)):
            w.writerow([rep.followed.start_hour + h, sc.method, _num(sc.value), _num(a.mileage),
                        _num(a.energy_requirement_mwh_per_mw), _num(rep.run.trajectory.soc[(h + 1) * n - 1])])
        w.writerow(["all", rep.score.method, _num(rep.score.value), "", "", _num(rep.run.trajectory.final_soc)])
    write_manifest(cfg, "simulate", out, ["trajectory.csv", "events.csv", "performance.csv"])
    return rep


# ---------------------------------------------------------------- settle

def settle_simulation(cfg: ScenarioConfig, rep: SimulationReport, prices: PriceSeries) -> list[tuple]:
    """Per-hour credits of a simulated run against consecutive price hours."""
    followed = rep.followed
    hours = followed.hours()
    if len(prices) < len(hours):
        raise SettlementError(f"{len(hours)} simulated hours but only {len(prices)} price rows")
    slow_hourly = hourly_analytics(rep.signals["slow"])
    fol_hourly = hourly_analytics(followed)
    traj = rep.run.trajectory
    n = followed.steps_per_hour
    k = n // MISO_INTERVALS_PER_HOUR if n % MISO_INTERVALS_PER_HOUR == 0 else None
    rows = []
    for h in range(len(hours)):
        rec = prices.records[h]
        ideal = cfg.performance == "ideal"
        rho = 1.0 if ideal else rep.hourly_scores[h].value
        ref = slow_hourly[h].mileage if cfg.market is Market.PJM else None
        if ref is not None and ref <= 0:
            raise SettlementError(f"hour {rec.hour}: reference (slow) mileage is zero")
        award = AwardRecord(cfg.capacity_mw, fol_hourly[h].mileage, ref, rho)
        scores = None
        if cfg.market is Market.MISO and not ideal:
            if k is None:
                raise SettlementError("MISO settlement needs steps per hour divisible by 12")
            scores = rep.interval_scores[h * MISO_INTERVALS_PER_HOUR:(h + 1) * MISO_INTERVALS_PER_HOUR]
        res = settle(award, rec, scores, rule=cfg.market)
        if cfg.market is Market.CAISO and rec.lmp is not None:
            part = _hour_slice(traj, h * n, (h + 1) * n)
            res = res.with_energy(caiso_energy_settlement(
                part.charged_mwh, part.discharged_mwh, float(part.rem_energy_mwh.sum()), rec.lmp))
        rows.append((prices.market, rec.hour, res))
    return rows


def cmd_settle(cfg: ScenarioConfig):
    if cfg.prices is None:
        raise SettlementError("market.prices: a price file is required for settle")
    if cfg.market is None:
        raise SettlementError("market.name: a market is required for settle")
    out = _prepare_out(cfg)
    rep = simulate(cfg)
    prices = load_prices(cfg.prices, cfg.market)
    rows = settle_simulation(cfg, rep, prices)
    grand = write_settlement_report(rows, out / "settlement.csv")
    write_manifest(cfg, "settle", out, ["settlement.csv"])
    log.info("settled %d hours, total %s $", len(rows), grand)
    return rows, grand


# ---------------------------------------------------------------- compare-markets

@dataclass
class MarketColumn:
    label: str
    market: Market
    prices: PriceSeries
    credits: list
    payments: np.ndarray
    summary: QuantileSummary


def _mileage_seq(value: str | None, n: int, signal_hourly: dict):
    if value is None:
        return None, None
    if value in signal_hourly:
        return None, [a.mileage for a in signal_hourly[value][:n]]
    return float(value), None


def _mean(series: PriceSeries, col: str) -> float:
    v = series.column(col)
    v = v[~np.isnan(v)]
    return float(v.mean()) if v.size else math.nan


def cmd_compare_markets(cfg: ScenarioConfig) -> list[MarketColumn]:
    if not cfg.compare:
        raise SettlementError("compare-markets needs at least one [compare.<label>] section")
    out = _prepare_out(cfg)
    loaded = [(c, load_prices(c.prices, c.market)) for c in cfg.compare]
    needs_signal = any(v in ("ace", "slow", "fast", "trinary") for c, _ in loaded
                       for v in (c.mileage, c.reference_mileage))
    signal_hourly = {}
    if needs_signal:
        hours = max(len(s) for _, s in loaded)
        signal_hourly = {k: hourly_analytics(v) for k, v in build_signals(cfg, hours).items()}
        if cfg.signal.source == "csv" and any(len(v) < hours for v in signal_hourly.values()):
            raise SettlementError(f"signal file covers fewer hours than the longest price file ({hours})")
    columns = []
    for c, series in loaded:
        m_const, m_seq = _mileage_seq(c.mileage, len(series), signal_hourly)
        r_const, r_seq = _mileage_seq(c.reference_mileage, len(series), signal_hourly)
        template = AwardRecord(c.capacity_mw, m_const if m_const is not None else 0.0, r_const)
        credits, totals, summary = payment_distribution(series, template, 1.0, m_seq, r_seq)
        columns.append(MarketColumn(c.label, c.market, series, credits, totals, summary))

    with open(out / "compare_markets.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "market", "hours", "mean_capacity_price", "mean_reg_up_capacity_price",
                    "mean_reg_down_capacity_price", "mean_mileage_price", "mean_capacity_credit",
                    "mean_mileage_credit", "mean_payment"])
        for col in columns:
            w.writerow([
                col.label, col.market.value, len(col.prices),
                _num(_mean(col.prices, "capacity_price")),
                _num(_mean(col.prices, "reg_up_capacity_price")),
                _num(_mean(col.prices, "reg_down_capacity_price")),
                _num(_mean(col.prices, "mileage_price")),
                _num(float(np.mean([r.capacity_credit for r in col.credits]))),
                _num(float(np.mean([r.mileage_credit for r in col.credits]))),
                _num(float(col.payments.mean())),
            ])
    write_summary_csv([(c.label, c.summary) for c in columns], out / "payment_summary.csv")
    with open(out / "hourly_payments.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "market", "hour", "payment"])
        for col in columns:
            for rec, p in zip(col.prices.records, col.payments.tolist()):
                w.writerow([col.label, col.market.value, rec.hour, repr(p)])
    write_manifest(cfg, "compare-markets", out, ["compare_markets.csv", "payment_summary.csv", "hourly_payments.csv"])
    return columns

