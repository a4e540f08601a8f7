"""Pay-for-performance regulation credits.

Three credit shapes are in use across the ISOs:

* generic (CAISO, NYISO real-time, MISO below threshold)::

      C * (capacity_price + rho * M * mileage_price)

* ISO-NE, where the score also scales the capacity term::

      rho * C * (capacity_price + M * mileage_price)

* PJM, where mileage is replaced by the ratio to the conventional signal::

      rho * C * (capacity_price + (M / M_ref) * mileage_price)

MISO pays full credit for every 5-minute interval whose score is at least
0.70. CAISO additionally settles regulation and restoration energy at the LMP.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum


class SettlementError(ValueError):
    pass


class Market(str, Enum):
    PJM = "PJM"
    NYISO = "NYISO"
    MISO = "MISO"
    ISONE = "ISONE"
    CAISO = "CAISO"

    @classmethod
    def parse(cls, value) -> "Market":
        if isinstance(value, Market):
            return value
        key = str(value).strip().upper().replace("-", "").replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise SettlementError(f"unknown market {value!r}; expected one of {[m.value for m in cls]}") from None


MISO_FULL_CREDIT_THRESHOLD = 0.70
MISO_INTERVALS_PER_HOUR = 12


def _opt_finite(name, v):
    if v is not None and not math.isfinite(v):
        raise SettlementError(f"{name} must be finite, got {v}")


@dataclass(frozen=True)
class PriceRecord:
    """One market hour of clearing prices. Capacity prices are $/MW-h, mileage $/dMW."""

    market: Market
    hour: str
    capacity_price: float | None = None
    mileage_price: float | None = None
    lmp: float | None = None
    reg_up_capacity_price: float | None = None
    reg_down_capacity_price: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "market", Market.parse(self.market))
        for name in ("capacity_price", "mileage_price", "lmp", "reg_up_capacity_price", "reg_down_capacity_price"):
            _opt_finite(name, getattr(self, name))
        if (self.reg_up_capacity_price is None) != (self.reg_down_capacity_price is None):
            raise SettlementError("reg-up and reg-down capacity prices must be given together")
        if self.capacity_price is None and not self.is_split:
            raise SettlementError("a capacity price (or an up/down pair) is required")

    @property
    def is_split(self) -> bool:
        return self.reg_up_capacity_price is not None

    @property
    def effective_capacity_price(self) -> float:
        """Per-MW capacity price of a symmetric offer.

        With an up/down split the same capacity is offered in both
        directions, so the two component credits add.
        """
        if self.is_split:
            return self.reg_up_capacity_price + self.reg_down_capacity_price
        return self.capacity_price


@dataclass(frozen=True)
class AwardRecord:
    """One unit-hour of regulation participation."""

    capacity_mw: float
    mileage: float = 0.0
    reference_mileage: float | None = None
    performance: float = 1.0

    def __post_init__(self):
        perf = getattr(self.performance, "value", self.performance)
        object.__setattr__(self, "performance", float(perf))
        if self.capacity_mw < 0:
            raise SettlementError("capacity_mw must be >= 0")
        if self.mileage < 0:
            raise SettlementError("mileage must be >= 0")
        if not 0 <= self.performance <= 1:
            raise SettlementError("performance must be in [0, 1]")
        if self.reference_mileage is not None and not self.reference_mileage > 0:
            raise SettlementError("reference_mileage must be positive")


@dataclass(frozen=True)
class CreditResult:
    capacity_credit: float
    mileage_credit: float
    energy_settlement: float = 0.0

    @property
    def total(self) -> float:
        return self.capacity_credit + self.mileage_credit + self.energy_settlement

    def with_energy(self, energy_settlement: float) -> "CreditResult":
        return CreditResult(self.capacity_credit, self.mileage_credit, energy_settlement)


def _mileage_price(award: AwardRecord, price: PriceRecord) -> float:
    if price.mileage_price is None:
        if award.mileage > 0:
            raise SettlementError(f"{price.market.value} {price.hour}: mileage {award.mileage} but no mileage price")
        return 0.0
    return price.mileage_price


def credit_generic(award: AwardRecord, price: PriceRecord) -> CreditResult:
    lam_m = _mileage_price(award, price)
    c = award.capacity_mw
    return CreditResult(c * price.effective_capacity_price, c * award.performance * award.mileage * lam_m)


def credit_isone(award: AwardRecord, price: PriceRecord) -> CreditResult:
    lam_m = _mileage_price(award, price)
    rc = award.performance * award.capacity_mw
    return CreditResult(rc * price.effective_capacity_price, rc * award.mileage * lam_m)


def credit_pjm(award: AwardRecord, price: PriceRecord) -> CreditResult:
    if award.reference_mileage is None:
        raise SettlementError("PJM credit needs the conventional-signal reference mileage")
    lam_m = _mileage_price(award, price)
    rc = award.performance * award.capacity_mw
    return CreditResult(rc * price.effective_capacity_price, rc * award.mileage / award.reference_mileage * lam_m)


def credit_miso(award: AwardRecord, price: PriceRecord, interval_scores) -> CreditResult:
    """Sum of 12 five-minute credits; intervals scoring >= 0.70 get full credit."""
    scores = [float(s) for s in interval_scores]
    if len(scores) != MISO_INTERVALS_PER_HOUR:
        raise SettlementError(f"MISO needs {MISO_INTERVALS_PER_HOUR} interval scores, got {len(scores)}")
    if any(not 0 <= s <= 1 for s in scores):
        raise SettlementError("interval scores must be in [0, 1]")
    lam_m = _mileage_price(award, price)
    c = award.capacity_mw
    # capacity is paid on every interval regardless of score; only rho varies
    rho_sum = sum(1.0 if s >= MISO_FULL_CREDIT_THRESHOLD else s for s in scores)
    return CreditResult(c * price.effective_capacity_price, c * award.mileage * lam_m * rho_sum / MISO_INTERVALS_PER_HOUR)


def caiso_energy_settlement(charged_mwh: float, discharged_mwh: float, rem_dispatch_mwh: float, lmp: float) -> float:
    """Signed $ for regulation plus restoration energy at the LMP (negative: unit pays).

    When restoration keeps SoC fixed, the net is the unit's losses times the LMP.
    """
    if charged_mwh < 0 or discharged_mwh < 0:
        raise SettlementError("charged and discharged energy must be >= 0")
    return (discharged_mwh - charged_mwh - rem_dispatch_mwh) * lmp


def settle(award: AwardRecord, price: PriceRecord, interval_scores=None, rule=None) -> CreditResult:
    """Apply the credit rule of ``rule`` (default: the price record's market)."""
    m = price.market if rule is None else Market.parse(rule)
    if m is Market.PJM:
        return credit_pjm(award, price)
    if m is Market.ISONE:
        return credit_isone(award, price)
    if m is Market.MISO:
        if interval_scores is None:
            interval_scores = [award.performance] * MISO_INTERVALS_PER_HOUR
        return credit_miso(award, price, interval_scores)
    return credit_generic(award, price)


def prorate(result: CreditResult, fraction_of_hour: float) -> CreditResult:
    """Scale an hourly credit to a partial-hour award."""
    if not 0 <= fraction_of_hour <= 1:
        raise SettlementError("fraction_of_hour must be in [0, 1]")
    return CreditResult(
        result.capacity_credit * fraction_of_hour,
        result.mileage_credit * fraction_of_hour,
        result.energy_settlement * fraction_of_hour,
    )


CENT = Decimal("0.01")


def to_cents(x: float) -> Decimal:
    return Decimal(repr(x)).quantize(CENT, rounding=ROUND_HALF_EVEN)


SETTLEMENT_COLUMNS = ["market", "hour", "capacity_credit", "mileage_credit", "energy_settlement", "total"]


def write_settlement_report(rows, path) -> Decimal:
    """Write ``(market, hour, CreditResult)`` rows in cents; returns the cent-exact grand total.

    Each component is rounded to the cent and the row total is the sum of the
    rounded components, so the report adds up exactly.
    """
    grand = Decimal("0")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SETTLEMENT_COLUMNS)
        for market, hour, res in rows:
            parts = [to_cents(res.capacity_credit), to_cents(res.mileage_credit), to_cents(res.energy_settlement)]
            total = sum(parts, Decimal("0"))
            grand += total
            w.writerow([Market.parse(market).value, hour, *map(str, parts), str(total)])
    return grand
