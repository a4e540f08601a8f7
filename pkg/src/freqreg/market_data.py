"""Normalized regulation price files and distribution statistics.

All markets share one CSV layout::

    market,hour_utc,capacity_price,mileage_price,lmp,reg_up_capacity_price,reg_down_capacity_price

Empty fields mean the market has no such price. Hours are UTC strings
``YYYY-MM-DDTHH``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .settlement import AwardRecord, Market, PriceRecord, SettlementError, settle

log = logging.getLogger(__name__)

PRICE_COLUMNS = [
    "market",
    "hour_utc",
    "capacity_price",
    "mileage_price",
    "lmp",
    "reg_up_capacity_price",
    "reg_down_capacity_price",
]
SUMMARY_COLUMNS = ["metric", "min", "lower_fence", "q1", "median", "q3", "upper_fence", "max", "outliers"]
HOUR_FORMAT = "%Y-%m-%dT%H"


class PriceFileError(ValueError):
    """Raised with every row diagnostic collected from a price file."""

    def __init__(self, path, diagnostics):
        self.path = str(path)
        self.diagnostics = list(diagnostics)
        super().__init__(f"{path}: {len(self.diagnostics)} invalid row(s)\n" + "\n".join(self.diagnostics))


@dataclass(frozen=True)
class PriceSeries:
    market: Market
    records: tuple = ()
    diagnostics: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "market", Market.parse(self.market))
        object.__setattr__(self, "records", tuple(self.records))
        hours = [r.hour for r in self.records]
        if any(r.market is not self.market for r in self.records):
            raise SettlementError("price series mixes markets")
        if any(a >= b for a, b in zip(hours, hours[1:])):
            raise SettlementError("price series hours must be strictly increasing")

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records])


def _parse_hour(text: str) -> str:
    datetime.strptime(text, HOUR_FORMAT)
    return text


def _parse_price(text: str):
    text = text.strip()
    if text == "":
        return None
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite")
    return v


def load_prices(path, market, on_error: str = "raise") -> PriceSeries:
    """Read, validate and time-sort a normalized price CSV.

    A wrong header fails immediately. Row problems are collected as
    ``path:line: column: message`` diagnostics; with ``on_error="raise"`` they
    are raised together, with ``"skip"`` the bad rows are dropped and the
    diagnostics kept on the series.
    """
    if on_error not in ("raise", "skip"):
        raise ValueError("on_error must be 'raise' or 'skip'")
    market = Market.parse(market)
    diags = []
    by_hour = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PRICE_COLUMNS:
            raise PriceFileError(path, [f"{path}:1: header must be {','.join(PRICE_COLUMNS)}, got {header}"])
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(PRICE_COLUMNS):
                diags.append(f"{path}:{lineno}: expected {len(PRICE_COLUMNS)} fields, got {len(row)}")
                continue
            values = {}
            bad = False
            for col, text in zip(PRICE_COLUMNS, row):
                try:
                    if col == "market":
                        values[col] = Market.parse(text)
                    elif col == "hour_utc":
                        values[col] = _parse_hour(text.strip())
                    else:
                        values[col] = _parse_price(text)
                except (ValueError, SettlementError):
                    diags.append(f"{path}:{lineno}: {col}: cannot parse {text!r}")
                    bad = True
            if bad:
                continue
            if values["market"] is not market:
                diags.append(f"{path}:{lineno}: market: {values['market'].value} in a {market.value} file")
                continue
            hour = values["hour_utc"]
            if hour in by_hour:
                diags.append(f"{path}:{lineno}: hour_utc: duplicate timestamp {hour} (first at line {by_hour[hour][0]})")
                continue
            try:
                rec = PriceRecord(
                    market,
                    hour,
                    values["capacity_price"],
                    values["mileage_price"],
                    values["lmp"],
                    values["reg_up_capacity_price"],
                    values["reg_down_capacity_price"],
                )
            except SettlementError as exc:
                diags.append(f"{path}:{lineno}: {exc}")
                continue
            by_hour[hour] = (lineno, rec)
    if diags and on_error == "raise":
        raise PriceFileError(path, diags)
    for d in diags:
        log.warning(d)
    records = [rec for _, (_, rec) in sorted(by_hour.items())]
    log.info("loaded %d %s price rows from %s", len(records), market.value, path)
    return PriceSeries(market, records, tuple(diags))


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_prices(series: PriceSeries, path) -> None:
    """Inverse of :func:`load_prices`; floats are written with ``repr`` so they reload bit-exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_COLUMNS)
        for r in series.records:
            w.writerow([
                r.market.value, r.hour, _fmt(r.capacity_price), _fmt(r.mileage_price), _fmt(r.lmp),
                _fmt(r.reg_up_capacity_price), _fmt(r.reg_down_capacity_price),
            ])


@dataclass(frozen=True)
class QuantileSummary:
    min: float
    lower_fence: float
    q1: float
    median: float
    q3: float
    upper_fence: float
    max: float
    outlier_count: int
    mean: float = math.nan
    count: int = 0

    def row(self, metric: str) -> list:
        return [metric, *(repr(float(v)) for v in (self.min, self.lower_fence, self.q1, self.median,
                                                   self.q3, self.upper_fence, self.max)), self.outlier_count]


def _quantile(sorted_x: np.ndarray, q: float) -> float:
    # rank (n - 1) q, interpolated as lo + frac * (hi - lo); numpy.quantile rounds
    # differently in the last bit for frac >= 0.5, so the form is pinned here
    h = (sorted_x.size - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, sorted_x.size - 1)
    a, b = float(sorted_x[lo]), float(sorted_x[hi])
    return a + (h - lo) * (b - a)


def boxplot_stats(values, exclude_outliers: bool = False) -> QuantileSummary:
    """Quartiles (linear interpolation), Tukey fences at 1.5 IQR, outlier count.

    With ``exclude_outliers`` the reported min and max are the most extreme
    values inside the fences, i.e. the whisker ends of a box plot.
    """
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)] if x.size else x
    if x.size == 0:
        raise ValueError("boxplot_stats needs at least one value")
    xs = np.sort(x)
    q1, med, q3 = (_quantile(xs, q) for q in (0.25, 0.5, 0.75))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outside = (x < lo) | (x > hi)
    kept = x[~outside] if exclude_outliers else x
    return QuantileSummary(
        float(kept.min()), float(lo), float(q1), float(med), float(q3), float(hi), float(kept.max()),
        int(outside.sum()), float(x.mean()), int(x.size),
    )


def write_summary_csv(summaries, path) -> None:
    """``summaries`` is an iterable of ``(metric, QuantileSummary)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for metric, s in summaries:
            w.writerow(s.row(metric))


def payment_distribution(
    series: PriceSeries,
    award_template: AwardRecord,
    performance: float = 1.0,
    hourly_mileage=None,
    hourly_reference_mileage=None,
    rule=None,
):
    """Hourly credit under the series' market rule, plus its box-plot summary.

    Every hour uses ``award_template`` with the given performance score
    (ideal 1.0 by default). ``rule`` overrides the market whose credit
    formula is applied. Per-hour mileage sequences override the
    template's values.
    """
    if len(series) == 0:
        raise ValueError("price series is empty")
    n = len(series)
    for name, seq in (("hourly_mileage", hourly_mileage), ("hourly_reference_mileage", hourly_reference_mileage)):
        if seq is not None and len(seq) != n:
            raise ValueError(f"{name} has {len(seq)} entries for {n} price hours")
    results = []
    for i, rec in enumerate(series.records):
        award = AwardRecord(
            award_template.capacity_mw,
            award_template.mileage if hourly_mileage is None else float(hourly_mileage[i]),
            award_template.reference_mileage if hourly_reference_mileage is None else float(hourly_reference_mileage[i]),
            performance,
        )
        results.append(settle(award, rec, rule=rule))
    totals = np.array([r.total for r in results])
    return results, totals, boxplot_stats(totals)
