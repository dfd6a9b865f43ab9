"""Linearized x-axis models of the three test UAVs.

Each system is a feedback loop with plant ``P``, PID controller ``C`` and a
disturbance observer made of the inverse block ``M`` and low-pass ``Q``.
The plant maps commanded x-acceleration to x-position through a first-order
lag that lumps the attitude loop::

    P(s) = 1 / (s^2 (tau s + 1))

discretized by zero-order hold.  ``C`` and ``Q`` are digital filters
discretized with Tustin's method.  ``M = Q * stable_inverse(P_hat)``, the
causal approximate inverse of the nominal plant filtered by ``Q`` (the
standard observer ``Q P^-1``).
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from numbers import Number

import numpy as np

from . import lti_core as lti
from .lti_core import TransferFunction

__all__ = [
    "SystemSpec", "SystemModel", "ModelError", "UnstableLoopError",
    "DEFAULT_SPECS", "build_system", "perturb", "margin", "without_dob",
    "extract_delta", "load_specs", "OMEGA_0",
]

KI_RATIO = 0.2
KD_RATIO = 6.0
DERIV_CUTOFF = 80.0
Q_CUTOFF = 6.0
TS = 0.02
# upper edge of the band where the reference map must be flat
OMEGA_0 = 1.0
FLAT_BAND = (0.01, OMEGA_0)
FLAT_DB = 1.0
FLAT_DEG = 10.0


class ModelError(ValueError):
    """A system spec cannot be turned into an acceptable model."""


class UnstableLoopError(ModelError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    """Physical and controller parameters of one system.

    `ki`, `kd` and `actuator_tau` default to ``0.2 kp``, ``6 kp`` and half
    the arm length (in metres, read as seconds).
    """

    label: str
    mass: float
    arm_length: float
    kp: float
    ki: float | None = None
    kd: float | None = None
    actuator_tau: float | None = None
    q_cutoff: float = Q_CUTOFF
    ts: float = TS
    deriv_cutoff: float = DERIV_CUTOFF

    def __post_init__(self):
        if self.ki is None:
            object.__setattr__(self, "ki", KI_RATIO * self.kp)
        if self.kd is None:
            object.__setattr__(self, "kd", KD_RATIO * self.kp)
        if self.actuator_tau is None:
            object.__setattr__(self, "actuator_tau", self.arm_length / 2.0)
        if self.mass <= 0:
            raise ModelError(f"{self.label}: mass must be positive")
        if self.kp <= 0:
            raise ModelError(f"{self.label}: kp must be positive")
        if self.ki < 0 or self.kd < 0:
            raise ModelError(f"{self.label}: ki and kd must be non-negative")
        if self.actuator_tau <= 0:
            raise ModelError(f"{self.label}: actuator_tau must be positive")
        if self.ts <= 0:
            raise ModelError(f"{self.label}: ts must be positive")
        if not 0 < self.q_cutoff < np.pi / self.ts:
            raise ModelError(f"{self.label}: q_cutoff must lie in (0, pi/ts)")
        if not 0 < self.deriv_cutoff < np.pi / self.ts:
            raise ModelError(f"{self.label}: deriv_cutoff must lie in (0, pi/ts)")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ModelError(f"unknown SystemSpec fields: {sorted(unknown)}")
        return cls(**d)


# masses in kg, arm lengths in metres
DEFAULT_SPECS = (
    SystemSpec("UAV1", mass=0.921, arm_length=0.228, kp=3.0),
    SystemSpec("UAV2", mass=1.001, arm_length=0.240, kp=1.2),
    SystemSpec("UAV3", mass=1.234, arm_length=0.318, kp=1.9),
)


@dataclass(frozen=True)
class SystemModel:
    spec: SystemSpec
    p_hat: TransferFunction
    p_actual: TransferFunction
    c: TransferFunction
    q: TransferFunction
    m: TransferFunction
    delta: TransferFunction = field(repr=False)

    @property
    def label(self):
        return self.spec.label

    @property
    def ts(self):
        return self.spec.ts

    @property
    def has_dob(self):
        return not (self.q.is_zero and self.m.is_zero)

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "p_hat": self.p_hat.to_dict(),
            "p_actual": self.p_actual.to_dict(),
            "c": self.c.to_dict(),
            "q": self.q.to_dict(),
            "m": self.m.to_dict(),
            "delta": self.delta.to_dict(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _plant(spec):
    return lti.from_continuous_zoh([1.0], [spec.actuator_tau, 1.0, 0.0, 0.0], spec.ts)


def _pid(spec):
    # kp + ki/s + kd s / (s/N + 1) over the common denominator s (s/N + 1)
    n = spec.deriv_cutoff
    num = np.polyadd(np.polyadd([spec.kd, 0.0, 0.0], spec.kp * np.array([1 / n, 1.0, 0.0])),
                     spec.ki * np.array([1 / n, 1.0]))
    return lti.from_continuous_tustin(num, [1 / n, 1.0, 0.0], spec.ts)


def _q_filter(spec):
    w = spec.q_cutoff
    return lti.from_continuous_tustin([w * w], [1.0, 2 * w, w * w], spec.ts)


def _loop_denominator(p, c, q, m):
    return 1 - q + p * (m + c)


def _check_loop(label, p, c, q, m):
    d = _loop_denominator(p, c, q, m)
    if d.is_zero:
        raise UnstableLoopError(f"{label}: closed loop is singular")
    # closed-loop poles are the zeros of the loop denominator
    cl = d.zeros
    bad = cl[np.abs(cl) >= 1.0 - lti.STAB_EPS]
    if bad.size:
        raise UnstableLoopError(
            f"{label}: unstable closed-loop pole at z = {bad[np.argmax(np.abs(bad))]:.6g}")


def _check_flat(spec, p, c, q, m):
    d = _loop_denominator(p, c, q, m)
    w = np.logspace(np.log10(FLAT_BAND[0]), np.log10(FLAT_BAND[1]), 200)
    fr = lti.freq_response(p * c / d, w)
    mag = np.abs(fr.mag_db).max()
    ph = np.abs(fr.phase_deg).max()
    if mag > FLAT_DB or ph > FLAT_DEG:
        raise ModelError(
            f"{spec.label}: reference map not flat below {FLAT_BAND[1]} rad/s "
            f"(max |gain| {mag:.2f} dB, max |phase| {ph:.1f} deg)")


def build_system(spec: SystemSpec, check_flatness=True) -> SystemModel:
    """Assemble the nominal model of one system.

    Raises
    ------
    UnstableLoopError
        If the observer-augmented loop has a pole on or outside the unit circle.
    ModelError
        If `check_flatness` and ``|G_r|`` leaves +-1 dB / +-10 deg on
        [0.01, 1] rad/s.
    """
    p = _plant(spec)
    c = _pid(spec)
    q = _q_filter(spec)
    m = q * lti.stable_inverse(p)
    _check_loop(spec.label, p, c, q, m)
    if check_flatness:
        _check_flat(spec, p, c, q, m)
    zero = TransferFunction.constant(0.0, spec.ts)
    return SystemModel(spec, p, p, c, q, m, zero)


def perturb(model: SystemModel, delta) -> SystemModel:
    """Copy of `model` whose true plant is ``(1 + delta) * p_hat``.

    Only ``p_actual`` and ``delta`` change; everything designed from the
    nominal plant is kept.
    """
    if isinstance(delta, Number):
        delta = TransferFunction.constant(float(delta), model.ts)
    one_plus = 1 + delta
    if one_plus.is_zero:
        raise ModelError("1 + delta must not vanish")
    p_actual = one_plus * model.p_hat
    _check_loop(model.label, p_actual, model.c, model.q, model.m)
    return dataclasses.replace(model, p_actual=p_actual, delta=delta)


def extract_delta(model: SystemModel) -> TransferFunction:
    """Multiplicative error ``p_actual / p_hat - 1`` recomputed from the plants."""
    return model.p_actual / model.p_hat - 1


def without_dob(model: SystemModel) -> SystemModel:
    """The same system with the observer removed (Q = 0, M = 0)."""
    zero = TransferFunction.constant(0.0, model.ts)
    return dataclasses.replace(model, q=zero, m=zero)


def margin(model: SystemModel, omegas=None) -> float:
    """Uncertainty budget ``min_w |1 + P_hat C| / 2`` over a finite grid.

    The integrator makes ``|1 + P C|`` unbounded at DC, so DC itself is never
    evaluated; the default grid starts at 1e-3 rad/s.
    """
    if omegas is None:
        omegas = lti.default_grid(model.ts)
    loop = model.p_hat * model.c
    return float(np.min(np.abs(1 + lti.freq_response(loop, omegas).values)) / 2.0)


def load_specs(path):
    """Read a list of SystemSpec from JSON (a list, or ``{"systems": [...]}``)."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data["systems"]
    return [SystemSpec.from_dict(d) for d in data]
