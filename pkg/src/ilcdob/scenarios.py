"""Reference and disturbance profiles for the four test scenarios.

All signals are x-axis channels sampled at ``ts``.  Disturbances are
accelerations (m/s^2) and references are positions (m).

==  ==============================  ====================================
id  reference                       disturbance
==  ==============================  ====================================
1   hover at the origin             ``sin(0.9425 t)``
2   circle, radius 1 m              ``sin(0.9425 t)``
3   circle, radius 1 m              one positive half-sine pulse, peak 2
4   square, side sqrt(2) m          half-wave rectified ``sin(1.4138 t)``
==  ==============================  ====================================

The x-projection of the circle is ``R sin(2 pi t / T)`` and the square's
corners lie on the circle, which makes its x-projection a triangle wave of
amplitude 1 m.  Moving references are faded in from hover over the first
`ramp` seconds with a quintic smoothstep.  Starting at full speed would be a
velocity step, which the plant inverse in the learning filters reads as an
impulsive disturbance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Scenario", "NoiseSpec", "make_scenario", "add_noise", "rmse",
           "SCENARIO_IDS", "W_SINE", "W_RECT"]

SCENARIO_IDS = (1, 2, 3, 4)
W_SINE = 0.9425
W_RECT = 1.4138
PULSE_PEAK = 2.0
# largest disturbance amplitude and frequency used by any scenario that
# additive noise must stay below / above
_MIN_DIST_AMP = 1.0
_MAX_DIST_FREQ = W_RECT


@dataclass(frozen=True)
class Scenario:
    id: int
    t: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    flight_order: tuple
    ts: float
    duration: float
    circle_period: float = 20.0
    radius: float = 1.0
    ramp: float = 5.0

    def to_dict(self):
        # signals are regenerated from the parameters
        return {"id": self.id, "ts": self.ts, "duration": self.duration,
                "circle_period": self.circle_period, "radius": self.radius,
                "ramp": self.ramp, "flight_order": list(self.flight_order)}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        return make_scenario(d["id"], ts=d["ts"], duration=d["duration"],
                             circle_period=d.get("circle_period", 20.0),
                             radius=d.get("radius", 1.0), ramp=d.get("ramp", 5.0),
                             flight_order=d.get("flight_order"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class NoiseSpec:
    """Sinusoidal noise added to each system's disturbance.

    Each system gets ``amplitude * sin(frequency t + phase)`` added to its
    disturbance, with a phase looked up by label.
    """

    amplitude: float = 0.1
    frequency: float = 6.0
    phase_by_system: dict = field(default_factory=lambda: {
        "UAV1": 0.0, "UAV2": 2 * np.pi / 3, "UAV3": 4 * np.pi / 3})

    def __post_init__(self):
        if not 0 <= self.amplitude < _MIN_DIST_AMP:
            raise ValueError(
                f"noise amplitude must lie in [0, {_MIN_DIST_AMP}), got {self.amplitude}")
        if self.amplitude > 0 and self.frequency <= _MAX_DIST_FREQ:
            raise ValueError(
                f"noise frequency must exceed {_MAX_DIST_FREQ} rad/s, got {self.frequency}")

    def to_dict(self):
        return {"amplitude": self.amplitude, "frequency": self.frequency,
                "phase_by_system": dict(self.phase_by_system)}

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        if "phase_by_system" in kw:
            kw["phase_by_system"] = {str(k): float(v) for k, v in kw["phase_by_system"].items()}
        return cls(**kw)


def _circle_x(t, radius, period):
    return radius * np.sin(2 * np.pi * t / period)


def _square_x(t, radius, period):
    # triangle wave through 0 at t = 0, peaks +-radius at quarter periods
    return radius * (2 / np.pi) * np.arcsin(np.sin(2 * np.pi * t / period))


def _fade_in(t, ramp):
    if ramp <= 0:
        return np.ones_like(t)
    s = np.clip(t / ramp, 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s * s)


def make_scenario(id, ts=0.02, duration=60.0, circle_period=20.0, radius=1.0,
                  flight_order=None, ramp=5.0) -> Scenario:
    """Build scenario `id` (1 to 4) sampled on ``t = 0, ts, ..., < duration``.

    `flight_order` lists 1-based system positions.  The default is
    ``(1, 2, 3)`` except in scenario 4, which flies ``(1, 3, 2)``.
    """
    if id not in SCENARIO_IDS:
        raise ValueError(f"unknown scenario id {id!r}; expected one of {SCENARIO_IDS}")
    if ts <= 0 or duration <= 0:
        raise ValueError("ts and duration must be positive")
    n = int(round(duration / ts))
    if n < 2:
        raise ValueError("duration must span at least two samples")
    t = np.arange(n) * ts

    if id == 1:
        r = np.zeros(n)
        d = np.sin(W_SINE * t)
    elif id == 2:
        r = _circle_x(t, radius, circle_period)
        d = np.sin(W_SINE * t)
    elif id == 3:
        r = _circle_x(t, radius, circle_period)
        width = np.pi / W_SINE
        t0 = duration / 2 - width / 2
        inside = (t >= t0) & (t <= t0 + width)
        d = np.where(inside, PULSE_PEAK * np.sin(W_SINE * (t - t0)), 0.0)
    else:
        r = _square_x(t, radius, circle_period)
        d = np.maximum(0.0, np.sin(W_RECT * t))
    r = r * _fade_in(t, ramp)

    if flight_order is None:
        flight_order = (1, 3, 2) if id == 4 else (1, 2, 3)
    flight_order = tuple(int(k) for k in flight_order)
    if sorted(flight_order) != list(range(1, len(flight_order) + 1)):
        raise ValueError(f"flight order {flight_order} is not a permutation")
    return Scenario(id, t, r, d, flight_order, ts, duration, circle_period, radius, ramp)


def add_noise(d, spec: NoiseSpec, system_label, ts):
    """Disturbance `d` with the system's sinusoidal noise added."""
    d = np.asarray(d, dtype=float)
    if spec.amplitude == 0:
        return d.copy()
    try:
        phase = spec.phase_by_system[system_label]
    except KeyError:
        raise KeyError(f"no noise phase configured for system {system_label!r}") from None
    t = np.arange(d.size) * ts
    return d + spec.amplitude * np.sin(spec.frequency * t + phase)


def rmse(e, ts, settle=10.0, guard=0.0):
    """Root-mean-square of `e` over ``settle <= t < T - guard``.

    Parameters
    ----------
    e : array_like
        Error record sampled at `ts` from t = 0.
    settle : float
        Initial transient excluded, in seconds.
    guard : float
        Trailing interval excluded, in seconds.  Records built from
        non-causal learning filters carry end effects there.
    """
    e = np.asarray(e, dtype=float)
    lo = int(np.ceil(settle / ts - 1e-9))
    hi = e.size - int(np.ceil(guard / ts - 1e-9))
    if settle < 0 or guard < 0 or hi <= lo:
        raise ValueError(f"empty RMSE window for settle={settle}, guard={guard}")
    w = e[lo:hi]
    return float(np.sqrt(np.mean(w * w)))
