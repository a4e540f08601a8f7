"""Compiled and pure-Python kernels must agree bit for bit."""

import numpy as np
import pytest

from freqreg import kernels

BACKENDS = kernels.available_backends()
needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(1234)


def test_backend_flag():
    assert kernels.BACKEND in BACKENDS


@needs_ext
def test_ema_identical(rng):
    x = rng.uniform(-1, 1, 5000)
    a = BACKENDS["python"].ema(x, 0.03)
    b = BACKENDS["cython"].ema(x, 0.03)
    assert np.array_equal(a, b)


@needs_ext
def test_hysteresis_identical(rng):
    x = rng.uniform(-1, 1, 5000)
    assert np.array_equal(BACKENDS["python"].hysteresis(x, 0.25, 0.1), BACKENDS["cython"].hysteresis(x, 0.25, 0.1))


@needs_ext
def test_follow_identical(rng):
    cmd = rng.uniform(-3, 3, 5000)
    args = (0.4, 0.2, 2.0, 0.9, 0.85, 1 / 900)
    s1, p1 = BACKENDS["python"].follow(cmd, *args)
    s2, p2 = BACKENDS["cython"].follow(cmd, *args)
    assert np.array_equal(s1, s2) and np.array_equal(p1, p2)


@needs_ext
def test_ou_identical(rng):
    e = rng.standard_normal(5000)
    args = (1 / 900, 4.0, 0.9, 5.0)
    assert np.array_equal(BACKENDS["python"].ou_walk(e, *args), BACKENDS["cython"].ou_walk(e, *args))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_empty_inputs(name):
    k = BACKENDS[name]
    assert k.ema(np.array([]), 0.5).size == 0
    s, p = k.follow(np.array([]), 0.5, 1.0, 1.0, 1.0, 1.0, 0.1)
    assert s.size == 0 and p.size == 0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_ema_first_sample_initializes(name):
    out = BACKENDS[name].ema(np.array([2.0, 4.0]), 0.5)
    assert out.tolist() == [2.0, 3.0]


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_follow_clips_power_then_soc(name):
    # 2 MW request on a 1 MW unit, 0.05 MWh headroom over a 0.1 h step -> 0.5 MW
    s, p = BACKENDS[name].follow(np.array([2.0]), 0.95, 1.0, 1.0, 1.0, 1.0, 0.1)
    assert p[0] == pytest.approx(0.5)
    assert s[0] == pytest.approx(1.0)
