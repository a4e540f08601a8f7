"""Scenario files: INI sections, flag overrides, validation.

Example::

    [run]
    seed = 7

    [signal]
    source = synthesize
    hours = 24

    [ess]
    power_capacity_mw = 1
    energy_capacity_mwh = 0.5

    [market]
    name = NYISO
    policy = rtd
    prices = prices_nyiso.csv

    [policy.rtd]
    deadband_halfwidth = 0.1

    [compare.PJM-RegD]
    market = PJM
    prices = prices_pjm.csv
    mileage = fast
    reference_mileage = slow

Relative paths are resolved against the scenario file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .dispatch import RemConfig, RtdConfig
from .ess import EssSpec
from .settlement import Market
from .signal import (
    DEFAULT_ENTER,
    DEFAULT_EXIT,
    DEFAULT_MEAN_REVERSION,
    DEFAULT_RAMP_TIME_CONSTANT,
    DEFAULT_SMOOTHING_TIME_CONSTANT,
    DEFAULT_VOLATILITY,
    DEFAULT_ZERO_MEAN_WINDOW,
)


class ConfigError(ValueError):
    """Invalid scenario; the message names the offending field."""


POLICIES = ("none", "rtd", "rem", "trinary", "fast-slow", "agc-enhancement")
POLICY_MARKET = {
    "rem": Market.CAISO,
    "rtd": Market.NYISO,
    "trinary": Market.ISONE,
    "fast-slow": Market.PJM,
    "agc-enhancement": Market.MISO,
}
SIGNAL_KINDS = ("ace", "slow", "fast", "trinary")


@dataclass
class SignalSource:
    source: str = "synthesize"
    path: Path | None = None
    hours: int = 24
    step_seconds: float = 4.0
    mean_reversion: float = DEFAULT_MEAN_REVERSION
    volatility: float = DEFAULT_VOLATILITY
    ramp_time_constant: float = DEFAULT_RAMP_TIME_CONSTANT
    smoothing_time_constant: float = DEFAULT_SMOOTHING_TIME_CONSTANT
    zero_mean_window: float = DEFAULT_ZERO_MEAN_WINDOW
    enter_threshold: float = DEFAULT_ENTER
    exit_threshold: float = DEFAULT_EXIT
    follow: str | None = None
    export: bool = False

    @property
    def step_size_hours(self) -> float:
        return self.step_seconds / 3600.0


@dataclass
class CompareEntry:
    label: str
    market: Market
    prices: Path
    capacity_mw: float = 1.0
    mileage: str = "0"
    reference_mileage: str | None = None


@dataclass
class ScenarioConfig:
    seed: int = 0
    out: Path | None = None
    signal: SignalSource = field(default_factory=SignalSource)
    ess: EssSpec = field(default_factory=lambda: EssSpec(1.0, 1.0))
    regulation_capacity_mw: float | None = None
    market: Market | None = None
    policy: str = "none"
    prices: Path | None = None
    performance: str = "ideal"
    composite_max_lag_steps: int = 75
    slow_group_mw: float = 0.0
    rtd: RtdConfig = field(default_factory=RtdConfig)
    rem: RemConfig = field(default_factory=RemConfig)
    emergency_intervals: tuple = ()
    compare: list = field(default_factory=list)
    source_file: Path | None = None

    @property
    def capacity_mw(self) -> float:
        if self.regulation_capacity_mw is None:
            return self.ess.power_capacity_mw
        return self.regulation_capacity_mw

    @property
    def follow(self) -> str:
        if self.signal.follow:
            return self.signal.follow
        return {"fast-slow": "fast", "trinary": "trinary"}.get(self.policy, "ace")

    def as_dict(self) -> dict:
        """Plain, JSON-ready view for run manifests."""
        def conv(v):
            if isinstance(v, Path):
                return str(v)
            if isinstance(v, Market):
                return v.value
            if hasattr(v, "__dataclass_fields__"):
                return {k: conv(getattr(v, k)) for k in v.__dataclass_fields__}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            return v

        d = conv(self)
        d.pop("source_file", None)
        return d


def _get(section, key, conv, name, default):
    if section is None or key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{name}.{key}: invalid value {raw!r} ({exc})") from None


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _optional_float(text: str):
    return None if text.lower() in ("", "none", "auto") else float(text)


def load_scenario(path=None, overrides: dict | None = None) -> ScenarioConfig:
    """Parse a scenario file (or defaults when ``path`` is None) and apply overrides.

    Overrides use the flag names: ``seed``, ``out``, ``market``, ``policy``.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    base = Path(".")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config: file not found: {path}")
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"config: {exc}") from None
        base = path.parent

    def sec(name):
        return cp[name] if cp.has_section(name) else None

    def resolve(p):
        p = Path(p).expanduser()
        return p if p.is_absolute() else base / p

    known = {"run", "signal", "ess", "market", "policy.rtd", "policy.rem"}
    for s in cp.sections():
        if s not in known and not s.startswith("compare."):
            raise ConfigError(f"{s}: unknown section")

    cfg = ScenarioConfig(source_file=path)
    run = sec("run")
    cfg.seed = _get(run, "seed", int, "run", 0)
    out = _get(run, "out", str, "run", None)
    cfg.out = resolve(out) if out else None

    s = sec("signal")
    sig = SignalSource()
    sig.source = _get(s, "source", str.lower, "signal", "csv" if s is not None and "path" in s else "synthesize")
    if sig.source not in ("synthesize", "csv"):
        raise ConfigError(f"signal.source: must be 'synthesize' or 'csv', got {sig.source!r}")
    p = _get(s, "path", str, "signal", None)
    synth_keys = {"hours", "mean_reversion", "volatility", "ramp_time_constant"}
    if sig.source == "csv":
        if not p:
            raise ConfigError("signal.path: required when signal.source = csv")
        if s is not None and synth_keys & set(s.keys()):
            raise ConfigError(f"signal.source: exactly one signal source allowed; drop {sorted(synth_keys & set(s.keys()))}")
        sig.path = resolve(p)
    elif p:
        raise ConfigError("signal.path: exactly one signal source allowed; set signal.source = csv to read a file")
    for key, conv in (
        ("hours", int), ("step_seconds", float), ("mean_reversion", float), ("volatility", float),
        ("ramp_time_constant", float), ("smoothing_time_constant", float), ("zero_mean_window", float),
        ("enter_threshold", float), ("exit_threshold", float), ("export", _bool),
    ):
        setattr(sig, key, _get(s, key, conv, "signal", getattr(sig, key)))
    sig.follow = _get(s, "follow", str.lower, "signal", None)
    if sig.follow is not None and sig.follow not in SIGNAL_KINDS:
        raise ConfigError(f"signal.follow: must be one of {SIGNAL_KINDS}")
    if sig.hours < 1:
        raise ConfigError("signal.hours: must be >= 1")
    cfg.signal = sig

    e = sec("ess")
    try:
        cfg.ess = EssSpec(
            _get(e, "power_capacity_mw", float, "ess", 1.0),
            _get(e, "energy_capacity_mwh", float, "ess", 1.0),
            _get(e, "charge_efficiency", float, "ess", 1.0),
            _get(e, "discharge_efficiency", float, "ess", 1.0),
            _get(e, "initial_soc", float, "ess", 0.5),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"ess: {exc}") from None
    cfg.regulation_capacity_mw = _get(e, "regulation_capacity_mw", float, "ess", None)
    if cfg.regulation_capacity_mw is not None and not 0 <= cfg.regulation_capacity_mw <= cfg.ess.power_capacity_mw:
        raise ConfigError("ess.regulation_capacity_mw: must be within [0, power_capacity_mw]")

    m = sec("market")
    cfg.market = _get(m, "name", Market.parse, "market", None)
    cfg.policy = _get(m, "policy", str.lower, "market", "none")
    pr = _get(m, "prices", str, "market", None)
    cfg.prices = resolve(pr) if pr else None
    cfg.performance = _get(m, "performance", str.lower, "market", "ideal")
    cfg.composite_max_lag_steps = _get(m, "composite_max_lag_steps", int, "market", cfg.composite_max_lag_steps)
    cfg.slow_group_mw = _get(m, "slow_group_mw", float, "market", 0.0)
    em = _get(m, "emergency_intervals", str, "market", "")
    try:
        cfg.emergency_intervals = tuple(int(x) for x in em.replace(",", " ").split())
    except ValueError:
        raise ConfigError("market.emergency_intervals: expected interval indices") from None

    r = sec("policy.rtd")
    try:
        cfg.rtd = RtdConfig(
            _get(r, "deadband_halfwidth", float, "policy.rtd", 0.1),
            _get(r, "interval_minutes", float, "policy.rtd", 5.0) / 60.0,
            _get(r, "gain", _optional_float, "policy.rtd", None),
        )
        r = sec("policy.rem")
        cfg.rem = RemConfig(
            _get(r, "soc_set_point", float, "policy.rem", 0.5),
            _get(r, "dispatch_interval_minutes", float, "policy.rem", 15.0) / 60.0,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"policy: {exc}") from None

    for name in cp.sections():
        if not name.startswith("compare."):
            continue
        c = cp[name]
        label = name[len("compare."):]
        if "prices" not in c or "market" not in c:
            raise ConfigError(f"{name}: needs 'market' and 'prices'")
        cfg.compare.append(CompareEntry(
            label,
            _get(c, "market", Market.parse, name, None),
            resolve(c["prices"].strip()),
            _get(c, "capacity_mw", float, name, 1.0),
            _get(c, "mileage", str.lower, name, "0"),
            _get(c, "reference_mileage", str.lower, name, None),
        ))

    overrides = overrides or {}
    if overrides.get("seed") is not None:
        cfg.seed = int(overrides["seed"])
    if overrides.get("out") is not None:
        cfg.out = Path(overrides["out"])
    if overrides.get("market") is not None:
        try:
            cfg.market = Market.parse(overrides["market"])
        except ValueError as exc:
            raise ConfigError(f"--market: {exc}") from None
    if overrides.get("policy") is not None:
        cfg.policy = str(overrides["policy"]).lower()

    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    if cfg.policy not in POLICIES:
        raise ConfigError(f"market.policy: must be one of {POLICIES}, got {cfg.policy!r}")
    want = POLICY_MARKET.get(cfg.policy)
    if want is not None and cfg.market is not None and cfg.market is not want:
        raise ConfigError(f"market.policy: {cfg.policy} applies to {want.value}, not {cfg.market.value}")
    if want is not None and cfg.market is None:
        cfg.market = want
    if cfg.performance not in ("ideal", "simulated"):
        raise ConfigError("market.performance: must be 'ideal' or 'simulated'")
    if cfg.composite_max_lag_steps < 0:
        raise ConfigError("market.composite_max_lag_steps: must be >= 0")
    if cfg.policy == "agc-enhancement" and cfg.slow_group_mw < 0:
        raise ConfigError("market.slow_group_mw: must be >= 0")
    if cfg.emergency_intervals and cfg.policy != "rtd":
        raise ConfigError("market.emergency_intervals: only used with policy = rtd")
    if cfg.signal.source == "csv" and not cfg.signal.path.is_file():
        raise ConfigError(f"signal.path: file not found: {cfg.signal.path}")
    if cfg.prices is not None and not cfg.prices.is_file():
        raise ConfigError(f"market.prices: file not found: {cfg.prices}")
    for c in cfg.compare:
        if not c.prices.is_file():
            raise ConfigError(f"compare.{c.label}.prices: file not found: {c.prices}")
        for key in ("mileage", "reference_mileage"):
            v = getattr(c, key)
            if v is None or v in SIGNAL_KINDS:
                continue
            try:
                float(v)
            except ValueError:
                raise ConfigError(f"compare.{c.label}.{key}: number or one of {SIGNAL_KINDS}") from None
