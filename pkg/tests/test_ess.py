import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqreg.ess import (
    EssError,
    EssSpec,
    PerformanceScore,
    accuracy_score,
    composite_score,
    follow_signal,
)
from freqreg.signal import RegulationSignal, energy_balance, energy_requirement, synthesize_ace


def test_spec_validation():
    with pytest.raises(EssError):
        EssSpec(0, 1)
    with pytest.raises(EssError):
        EssSpec(1, 1, charge_efficiency=1.2)
    with pytest.raises(EssError):
        EssSpec(1, 1, initial_soc=-0.1)


def test_lossless_round_trip():
    spec = EssSpec(1, 10, 1, 1, 0.5)
    traj = follow_signal(spec, RegulationSignal(0.5, [1, -1]), 1.0)
    assert traj.soc.tolist() == pytest.approx([0.55, 0.5], abs=1e-15)


def test_charge_efficiency():
    spec = EssSpec(1, 10, 0.9, 1, 0.0)
    traj = follow_signal(spec, RegulationSignal(1.0, [1.0]), 1.0)
    assert traj.final_soc == pytest.approx(0.09, abs=1e-15)


def test_full_storage_cannot_charge():
    spec = EssSpec(1, 0.25, 1, 1, 1.0)
    sig = RegulationSignal(0.25, [1, 1, 1, 1])
    traj = follow_signal(spec, sig, 1.0)
    assert np.all(traj.actual_power_mw == 0)
    assert np.abs(traj.actual_power_mw - traj.commanded_power_mw).sum() > 0
    assert accuracy_score(traj, sig, 1.0).value == 0.0


def test_base_points_are_added():
    spec = EssSpec(2, 10, 1, 1, 0.5)
    traj = follow_signal(spec, RegulationSignal(0.5, [0.5, 0.5]), 1.0, base_points_mw=[-1.0, 0.5])
    assert traj.commanded_power_mw.tolist() == [-0.5, 1.0]
    assert traj.regulation_power_mw.tolist() == [0.5, 0.5]


def test_base_point_length_mismatch():
    spec = EssSpec(1, 1)
    with pytest.raises(EssError):
        follow_signal(spec, RegulationSignal(0.5, [0.1, 0.1]), 1.0, base_points_mw=[0.0])


def test_capacity_above_rating_rejected():
    with pytest.raises(EssError):
        follow_signal(EssSpec(1, 1), RegulationSignal(1.0, [0.1]), 2.0)


_specs = st.builds(
    EssSpec,
    st.floats(0.1, 5),
    st.floats(0.05, 5),
    st.floats(0.5, 1),
    st.floats(0.5, 1),
    st.floats(0, 1),
)


@settings(max_examples=100)
@given(_specs, st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=60), st.floats(0, 1))
def test_soc_bounds_and_energy_conservation(spec, values, cap_frac):
    sig = RegulationSignal(1 / 60, values)
    traj = follow_signal(spec, sig, cap_frac * spec.power_capacity_mw)
    assert np.all((traj.soc >= 0) & (traj.soc <= 1))
    assert np.all(np.abs(traj.actual_power_mw) <= spec.power_capacity_mw)
    delta = traj.soc_change_per_step().sum()
    assert traj.final_soc - spec.initial_soc == pytest.approx(delta, abs=1e-12)
    # per-step recurrence
    prev = np.concatenate([[spec.initial_soc], traj.soc[:-1]])
    assert np.allclose(traj.soc - prev, traj.soc_change_per_step(), rtol=0, atol=1e-14)


def test_minimum_store_follows_perfectly():
    for seed in range(5):
        sig = synthesize_ace(seed, 1)
        e = energy_requirement(sig)
        spec = EssSpec(1.0, e, 1, 1, energy_balance(sig))
        traj = follow_signal(spec, sig, 1.0)
        err = np.abs(traj.actual_power_mw - sig.values).sum() / np.abs(sig.values).sum()
        assert err < 1e-9


def test_undersized_store_cannot_follow():
    sig = synthesize_ace(0, 1)
    e = energy_requirement(sig)
    spec = EssSpec(1.0, 0.8 * e, 1, 1, energy_balance(sig))
    assert accuracy_score(follow_signal(spec, sig, 1.0), sig, 1.0).value < 1


# --- scores

def _traj_with_output(sig, output, capacity=1.0):
    spec = EssSpec(10, 1e6, 1, 1, 0.5)
    return follow_signal(spec, sig.with_values(np.asarray(output) / capacity), capacity)


def test_accuracy_perfect_and_zero():
    sig = synthesize_ace(3, 1)
    assert accuracy_score(_traj_with_output(sig, sig.values), sig, 1.0).value == 1.0
    assert accuracy_score(_traj_with_output(sig, np.zeros(len(sig))), sig, 1.0).value == 0.0


def test_accuracy_half_output():
    sig = synthesize_ace(3, 1)
    assert accuracy_score(_traj_with_output(sig, 0.5 * sig.values), sig, 1.0).value == pytest.approx(0.5, abs=1e-12)


def test_accuracy_flat_signal_is_perfect():
    sig = RegulationSignal(0.5, [0.0, 0.0])
    assert accuracy_score(_traj_with_output(sig, [0.0, 0.0]), sig, 1.0).value == 1.0


@settings(max_examples=50)
@given(st.floats(0.1, 10))
def test_accuracy_scale_invariant(k):
    sig = synthesize_ace(5, 1)
    out = 0.7 * sig.values + 0.1 * np.sin(np.arange(len(sig)))
    out = np.clip(out, -1, 1)
    base = accuracy_score(_traj_with_output(sig, out), sig, 1.0).value
    spec = EssSpec(20, 1e6, 1, 1, 0.5)
    scaled = follow_signal(spec, sig.with_values(out), k)
    assert accuracy_score(scaled, sig, k).value == pytest.approx(base, abs=1e-12)


def test_composite_perfect():
    sig = synthesize_ace(6, 1)
    sc = composite_score(_traj_with_output(sig, sig.values), sig, 1.0, 10)
    assert sc.value == pytest.approx(1.0)
    assert sc.method == "composite"


def test_composite_shifted_by_max_lag():
    sig = synthesize_ace(6, 1)
    lag = 10
    shifted = np.concatenate([np.zeros(lag), sig.values[:-lag]])
    sc = composite_score(_traj_with_output(sig, shifted), sig, 1.0, lag)
    assert sc.subscores["lag_steps"] == lag
    assert sc.subscores["delay"] == 0.0
    assert sc.subscores["correlation"] == pytest.approx(1.0)
    assert sc.subscores["precision"] == pytest.approx(1.0)
    assert sc.value == pytest.approx(2 / 3)


def test_composite_anticorrelated():
    sig = synthesize_ace(7, 1)
    sc = composite_score(_traj_with_output(sig, -sig.values), sig, 1.0, 0)
    assert sc.subscores["correlation"] == 0.0
    assert sc.subscores["precision"] == 0.0


def test_composite_constant_signal_falls_back_to_precision():
    sig = RegulationSignal(0.25, [0.5] * 4)
    sc = composite_score(_traj_with_output(sig, [0.25] * 4), sig, 1.0, 2)
    assert sc.value == pytest.approx(0.5)
    assert set(sc.subscores) == {"precision"}


@settings(max_examples=30)
@given(st.integers(0, 1000), st.integers(0, 20), st.floats(-1, 1))
def test_composite_subscores_in_range(seed, lag, gain):
    sig = synthesize_ace(seed, 1)
    out = np.clip(gain * np.roll(sig.values, 3), -1, 1)
    sc = composite_score(_traj_with_output(sig, out), sig, 1.0, lag)
    subs = [sc.subscores[k] for k in ("precision", "correlation", "delay")]
    assert all(0 <= v <= 1 for v in subs)
    assert sc.value == pytest.approx(sum(subs) / 3, abs=1e-15)


def test_composite_lag_bound():
    sig = RegulationSignal(0.5, [0.1, 0.2])
    with pytest.raises(EssError):
        composite_score(_traj_with_output(sig, [0.1, 0.2]), sig, 1.0, 2)


def test_score_range_enforced():
    with pytest.raises(EssError):
        PerformanceScore(1.5)


def test_trajectory_csv(tmp_path):
    spec = EssSpec(1, 10, 1, 1, 0.5)
    traj = follow_signal(spec, RegulationSignal(0.5, [1, -1]), 1.0)
    traj.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "step,commanded_mw,actual_mw,soc"
    assert lines[1] == "0,1.0,1.0,0.55"
