"""Regenerate the synthetic price fixtures: ``python tests/fixtures/make_fixtures.py``.

Prices are a diurnal shape plus noise and a few spikes, rounded to cents.
Each capacity column is then nudged cent by cent so that its mean hits a
chosen target exactly (CAISO reg-up 5.20 and reg-down 4.10 $/MW-h).
"""

from __future__ import annotations

import csv
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
HOURS = 720
START = datetime(2024, 6, 1)
COLUMNS = ["market", "hour_utc", "capacity_price", "mileage_price", "lmp",
           "reg_up_capacity_price", "reg_down_capacity_price"]


def _cents(rng, n, target, spread, spikes=3):
    h = np.arange(n)
    x = target * (1 + 0.35 * np.sin(2 * np.pi * (h % 24 - 8) / 24)) + rng.normal(0, spread, n)
    x[rng.choice(n, spikes, replace=False)] *= 6
    x = np.maximum(x, 0.01)
    x *= target / x.mean()
    c = np.maximum(np.round(x * 100).astype(np.int64), 1)
    # hit the target mean to the cent by moving single cents on the largest entries
    excess = int(c.sum() - round(target * 100) * n)
    order = np.argsort(-c, kind="stable")
    for i in range(abs(excess)):
        c[order[i % n]] -= np.sign(excess)
    return c


def _fmt(cents):
    return f"{cents // 100}.{cents % 100:02d}"


def _write(name, market, cols):
    with open(HERE / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(HOURS):
            hour = (START + timedelta(hours=i)).strftime("%Y-%m-%dT%H")
            row = [market, hour]
            for c in COLUMNS[2:]:
                row.append(_fmt(int(cols[c][i])) if c in cols else "")
            w.writerow(row)


def main():
    rng = np.random.default_rng(20240601)
    _write("caiso_prices.csv", "CAISO", {
        "reg_up_capacity_price": _cents(rng, HOURS, 5.2, 1.0),
        "reg_down_capacity_price": _cents(rng, HOURS, 4.1, 0.8),
        "mileage_price": _cents(rng, HOURS, 0.25, 0.05, 0),
        "lmp": _cents(rng, HOURS, 32.0, 6.0),
    })
    _write("pjm_prices.csv", "PJM", {
        "capacity_price": _cents(rng, HOURS, 14.0, 3.0),
        "mileage_price": _cents(rng, HOURS, 1.2, 0.3),
    })
    _write("isone_prices.csv", "ISONE", {
        "capacity_price": _cents(rng, HOURS, 9.0, 2.0),
        "mileage_price": _cents(rng, HOURS, 0.3, 0.05),
    })
    _write("nyiso_prices.csv", "NYISO", {
        "capacity_price": _cents(rng, HOURS, 10.0, 2.5),
        "mileage_price": _cents(rng, HOURS, 0.1, 0.02, 0),
    })
    _write("miso_prices.csv", "MISO", {"capacity_price": _cents(rng, HOURS, 8.0, 2.0)})
    # identical prices under two labels, for rule-identity comparisons
    cap = _cents(rng, HOURS, 10.0, 2.0)
    mil = _cents(rng, HOURS, 0.5, 0.1)
    _write("same_pjm.csv", "PJM", {"capacity_price": cap, "mileage_price": mil})
    _write("same_isone.csv", "ISONE", {"capacity_price": cap, "mileage_price": mil})
    _write("same_caiso.csv", "CAISO", {"capacity_price": cap, "mileage_price": mil})


if __name__ == "__main__":
    main()
