import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ilcdob.scenarios import (NoiseSpec, Scenario, W_RECT, W_SINE, add_noise,
                              make_scenario, rmse)

TS = 0.02


@pytest.mark.parametrize("sid", [1, 2, 3, 4])
def test_lengths_and_grid(sid):
    s = make_scenario(sid, ts=TS, duration=60.0)
    assert s.r.shape == s.d.shape == s.t.shape == (3000,)
    assert s.t[1] - s.t[0] == pytest.approx(TS)


def test_hover_reference_is_zero():
    s = make_scenario(1)
    assert np.all(s.r == 0)
    assert np.allclose(s.d, np.sin(W_SINE * s.t))


def test_circle_after_fade_in():
    s = make_scenario(2, ramp=5.0)
    late = s.t >= 5.0
    assert np.allclose(s.r[late], np.sin(2 * np.pi * s.t[late] / 20.0))
    assert np.max(np.abs(s.r)) <= 1.0 + 1e-12


def test_fade_in_starts_from_rest():
    s = make_scenario(2, ramp=5.0)
    v = np.diff(s.r) / TS
    assert abs(s.r[0]) < 1e-12
    assert abs(v[0]) < 1e-6


def test_rectified_disturbance():
    s = make_scenario(4)
    neg = np.sin(W_RECT * s.t) < 0
    assert np.all(s.d[neg] == 0)
    assert np.allclose(s.d[~neg], np.sin(W_RECT * s.t[~neg]))


def test_pulse_area():
    s = make_scenario(3, ts=0.001, duration=60.0)
    area = np.trapezoid(s.d, s.t)
    assert area == pytest.approx(2 * (2 / W_SINE), rel=1e-4)
    centre = s.t[np.argmax(s.d)]
    assert centre == pytest.approx(30.0, abs=0.01)
    assert s.d.max() == pytest.approx(2.0, abs=1e-5)


def test_triangle_reference():
    s = make_scenario(4, ramp=0.0)
    assert s.r.max() == pytest.approx(1.0, abs=1e-3)
    assert s.r.min() == pytest.approx(-1.0, abs=1e-3)
    slope = np.diff(s.r) / TS
    # piecewise constant speed of 4 A / T between corners
    assert np.allclose(np.abs(slope[np.abs(slope) > 0.19]), 0.2, atol=1e-9)


def test_triangle_has_sharp_corners_circle_is_smooth():
    acc4 = np.abs(np.diff(make_scenario(4).r, 2)).max() / TS ** 2
    acc2 = np.abs(np.diff(make_scenario(2).r, 2)).max() / TS ** 2
    assert acc4 > 50 * acc2


@pytest.mark.parametrize("sid,bound", [(1, 1.0), (2, 1.0), (3, 2.0), (4, 1.0)])
def test_disturbance_bounded(sid, bound):
    s = make_scenario(sid)
    assert np.max(np.abs(s.d)) <= bound + 1e-12
    assert np.max(np.abs(s.r)) <= 1.0 + 1e-12


def test_flight_orders():
    assert make_scenario(1).flight_order == (1, 2, 3)
    assert make_scenario(4).flight_order == (1, 3, 2)
    with pytest.raises(ValueError):
        make_scenario(1, flight_order=(1, 1, 2))


def test_unknown_id():
    with pytest.raises(ValueError):
        make_scenario(5)


def test_json_round_trip():
    s = make_scenario(3, duration=45.0)
    t = Scenario.from_json(s.to_json())
    assert t.id == 3 and t.duration == 45.0
    assert np.array_equal(t.r, s.r) and np.array_equal(t.d, s.d)


def test_noise_zero_amplitude_unchanged():
    d = make_scenario(1).d
    assert np.array_equal(add_noise(d, NoiseSpec(amplitude=0.0), "UAV1", TS), d)


def test_noise_antiphase_cancels():
    spec = NoiseSpec(phase_by_system={"a": 0.0, "b": np.pi})
    d = np.zeros(1000)
    total = add_noise(d, spec, "a", TS) + add_noise(d, spec, "b", TS)
    assert np.max(np.abs(total)) < 1e-12


def test_default_noise_bounded():
    d = make_scenario(1).d
    dev = add_noise(d, NoiseSpec(), "UAV2", TS) - d
    assert np.max(np.abs(dev)) == pytest.approx(0.1, rel=1e-3)


def test_noise_unknown_label():
    with pytest.raises(KeyError):
        add_noise(np.zeros(5), NoiseSpec(), "UAV9", TS)


def test_noise_invariants():
    with pytest.raises(ValueError):
        NoiseSpec(amplitude=1.5)
    with pytest.raises(ValueError):
        NoiseSpec(frequency=1.0)


def test_rmse_examples():
    assert rmse(np.full(1000, 0.5), TS, settle=1.0) == pytest.approx(0.5)
    assert rmse(np.zeros(1000), TS, settle=1.0) == 0.0
    # 1000 samples per period; window covers periods 2 to 20
    h = 2 * np.pi / 1000
    e = np.sin(h * np.arange(20000))
    assert rmse(e, h, settle=2 * np.pi) == pytest.approx(1 / np.sqrt(2), rel=1e-9)


def test_rmse_window():
    e = np.r_[np.full(500, 100.0), np.ones(1000), np.full(500, 100.0)]
    assert rmse(e, TS, settle=10.0, guard=10.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rmse(e, TS, settle=50.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.0, 10.0))
def test_rmse_sign_and_scaling(seed, k):
    e = np.random.default_rng(seed).standard_normal(800)
    assert rmse(-e, TS, 2.0) == pytest.approx(rmse(e, TS, 2.0))
    assert rmse(k * e, TS, 2.0) >= rmse(e, TS, 2.0)
