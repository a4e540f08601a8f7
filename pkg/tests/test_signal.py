import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqreg.signal import (
    RegulationSignal,
    SignalError,
    UndefinedBalanceError,
    analyze_hour,
    energy_balance,
    energy_requirement,
    hourly_analytics,
    mileage,
    read_signal_csv,
    split_fast_slow,
    synthesize_ace,
    trinary_quantize,
    write_signal_csv,
    zero_mean_condition,
)
from oracles import energy_balance_loop, energy_requirement_loop, mileage_loop, rel_err


def sig(values, step):
    return RegulationSignal(step, values)


# --- type invariants

def test_signal_rejects_out_of_range():
    with pytest.raises(SignalError):
        sig([0.5, 1.5], 0.5)


def test_signal_rejects_non_integer_steps_per_hour():
    with pytest.raises(SignalError):
        sig([0.1], 0.3)


def test_signal_rejects_empty():
    with pytest.raises(SignalError):
        sig([], 0.5)


def test_signal_values_are_read_only():
    s = sig([0.1, 0.2], 0.5)
    with pytest.raises(ValueError):
        s.values[0] = 0.3


# --- mileage

@pytest.mark.parametrize(
    "p, p_max, expected",
    [
        ([0, 0, 0], 1, 0.0),
        ([1, -1, 1, -1], 1, 7.0),
        ([0.5, 0.5], 2, 0.25),
    ],
)
def test_mileage_examples(p, p_max, expected):
    assert mileage(p, p_max, 0.0) == expected


def test_mileage_initial_level():
    assert mileage([1.0], 1.0, p_initial=1.0) == 0.0


@pytest.mark.parametrize("p_max", [0, -1])
def test_mileage_rejects_nonpositive_p_max(p_max):
    with pytest.raises(SignalError):
        mileage([0.0], p_max)


def test_mileage_rejects_over_capacity():
    with pytest.raises(SignalError):
        mileage([0.5, 2.5], 2.0)


# --- energy requirement and balance

@pytest.mark.parametrize(
    "s, step, expected",
    [
        ([1, 1, -1, -1], 0.25, 0.5),
        ([0, 0, 0, 0], 0.25, 0.0),
        ([1, 1, 1, 1], 0.25, 0.75),
    ],
)
def test_energy_requirement_examples(s, step, expected):
    assert energy_requirement(sig(s, step)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "s, step, expected",
    [
        ([-1, 1], 0.5, 1.0),
        ([1, -1], 0.5, 0.0),
        ([1, -1, -1, 1], 0.25, 0.5),
    ],
)
def test_energy_balance_examples(s, step, expected):
    assert energy_balance(sig(s, step)) == pytest.approx(expected, abs=1e-15)


def test_energy_balance_flat_hour_is_an_error():
    with pytest.raises(UndefinedBalanceError):
        energy_balance(sig([0, 0, 0, 0], 0.25))


def test_all_charging_hour_balance_outside_unit_interval():
    a = analyze_hour(sig([1, 1, 1, 1], 0.25))
    assert a.energy_balance == pytest.approx(-1 / 3)
    assert not a.balance_in_range


def test_hourly_metric_requires_exactly_one_hour():
    with pytest.raises(SignalError):
        energy_requirement(sig([0.1] * 8, 0.25))


def test_hourly_analytics_splits_hours():
    s = sig([1, 1, -1, -1, 0, 0, 0, 0], 0.25)
    rows = hourly_analytics(s)
    assert len(rows) == 2
    assert rows[0].energy_requirement_mwh_per_mw == pytest.approx(0.5)
    assert math.isnan(rows[1].energy_balance)
    # the second hour starts from the last level of the first (-1 -> 0)
    assert rows[1].mileage == 1.0


_signals = st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4).map(lambda v: sig(v, 0.25))


@given(_signals)
def test_energy_metrics_match_oracle(s):
    e = energy_requirement(s)
    assert rel_err(e, energy_requirement_loop(s.values.tolist(), 0.25)) < 1e-12
    if e > 1e-9:
        assert abs(energy_balance(s) - energy_balance_loop(s.values.tolist(), 0.25)) < 1e-9


@given(_signals)
def test_sign_flip_symmetry(s):
    flipped = s.with_values(-s.values)
    e = energy_requirement(s)
    assert energy_requirement(flipped) == pytest.approx(e, rel=1e-12, abs=1e-15)
    if e > 1e-9:
        assert energy_balance(flipped) == pytest.approx(1 - energy_balance(s), abs=1e-9)


@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=50))
def test_mileage_matches_loop(values):
    assert mileage(values, 1.0) == pytest.approx(mileage_loop(values), rel=1e-12, abs=0)


# --- synthesis

def test_zero_volatility_gives_zero_signal():
    s = synthesize_ace(5, 1, volatility=0.0)
    assert np.all(s.values == 0)


def test_synthesis_is_deterministic():
    assert synthesize_ace(11, 2) == synthesize_ace(11, 2)
    assert synthesize_ace(11, 2) != synthesize_ace(12, 2)


def test_synthesis_bounds_24h():
    s = synthesize_ace(1, 24, 1 / 900)
    assert len(s) == 24 * 900
    assert np.all(np.abs(s.values) <= 1)


def test_plain_ou_walk_option():
    s = synthesize_ace(1, 1, ramp_time_constant=0.0)
    assert np.all(np.abs(s.values) <= 1) and np.any(s.values != 0)


@pytest.mark.parametrize("kw", [{"hours": 0}, {"hours": 1, "volatility": -1}])
def test_synthesis_rejects_bad_parameters(kw):
    with pytest.raises(SignalError):
        synthesize_ace(1, **kw)


# --- fast / slow split

def test_constant_ace_has_no_fast_part():
    ace = sig([0.3] * 900, 1 / 900)
    slow, fast = split_fast_slow(ace)
    assert np.allclose(slow.values, 0.3, atol=1e-15)
    assert np.all(np.abs(fast.values) < 1e-15)


def test_zero_time_constant_is_identity():
    ace = synthesize_ace(2, 1)
    slow, fast = split_fast_slow(ace, smoothing_time_constant=0.0)
    assert slow == ace
    assert np.all(fast.values == 0)


def test_split_reconstructs_before_conditioning():
    ace = synthesize_ace(3, 2)
    slow, fast = split_fast_slow(ace)
    raw = ace.values - slow.values
    assert np.allclose(slow.values + raw, ace.values, rtol=0, atol=1e-15)
    assert np.array_equal(fast.values, zero_mean_condition(raw, 225))


def test_fast_window_means_are_zero():
    slow, fast = split_fast_slow(synthesize_ace(1, 24))
    means = fast.values.reshape(-1, 225).mean(axis=1)
    assert np.max(np.abs(means)) < 0.01
    assert np.all(np.abs(fast.values) <= 1)


def test_zero_mean_window_must_divide_hour():
    with pytest.raises(SignalError):
        split_fast_slow(synthesize_ace(1, 1), zero_mean_window=0.4)


def test_fast_carries_less_energy_than_ace():
    ace = synthesize_ace(4, 100)
    _, fast = split_fast_slow(ace)
    ea = [a.energy_requirement_mwh_per_mw for a in hourly_analytics(ace)]
    ef = [a.energy_requirement_mwh_per_mw for a in hourly_analytics(fast)]
    assert np.mean(np.array(ef) <= np.array(ea)) >= 0.9


# --- trinary

def test_trinary_examples():
    assert trinary_quantize(sig([0.5], 1.0), 0.3, 0.1).values.tolist() == [1]
    assert trinary_quantize(sig([0, 0], 0.5), 0.3, 0.1).values.tolist() == [0, 0]
    assert trinary_quantize(sig([0.4, 0.2, 0.05], 1 / 3), 0.3, 0.1).values.tolist() == [1, 1, 0]


def test_trinary_hysteresis_negative_and_direct_flip():
    out = trinary_quantize(sig([-0.3, -0.2, 0.3, 0.0], 0.25), 0.25, 0.1).values.tolist()
    assert out == [-1, -1, 1, 0]


def test_trinary_threshold_validation():
    with pytest.raises(SignalError):
        trinary_quantize(sig([0.1], 1.0), 0.1, 0.2)


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=40), st.floats(0.05, 0.9))
def test_trinary_output_alphabet(values, enter):
    out = trinary_quantize(RegulationSignal(1.0, values), enter, enter / 2)
    assert set(out.values.tolist()) <= {-1.0, 0.0, 1.0}


def test_trinary_mileage_close_to_fast_mileage():
    _, fast = split_fast_slow(synthesize_ace(8, 48))
    tri = trinary_quantize(fast)
    mf = np.mean([a.mileage for a in hourly_analytics(fast)])
    mt = np.mean([a.mileage for a in hourly_analytics(tri)])
    assert 0.5 <= mt / mf <= 2.0


# --- CSV

def test_signal_csv_round_trip(tmp_path):
    s = synthesize_ace(9, 2, start_hour=5)
    write_signal_csv(s, tmp_path / "s.csv")
    assert read_signal_csv(tmp_path / "s.csv", s.step_size_hours) == s


def test_signal_csv_rejects_out_of_range(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("hour,step,value\n0,0,0.5\n0,1,1.2\n")
    with pytest.raises(SignalError, match=":3:"):
        read_signal_csv(p, 0.5)


def test_signal_csv_rejects_gaps(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("hour,step,value\n0,0,0.5\n1,1,0.2\n")
    with pytest.raises(SignalError):
        read_signal_csv(p, 0.5)
