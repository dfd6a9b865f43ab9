"""Cross-system learning filters and error propagation.

System ``j`` learns from its predecessor ``j-1`` through::

    d_f,j = S{ L1 e_(j-1) + L2 d_f,(j-1) }
    L1 = (Gf_j Gd_(j-1))^-1 Gd_j,   L2 = L1 Gf_(j-1)

where the hatted design maps from the nominal plants are used and ``S``
is a zero-phase low-pass shaper.  ``L1`` is applied as an exact
two-sided filter.  It inverts the plant's discretization zeros, one of
which lies outside the unit circle, so its bounded realization runs
partly backward in time.  That is fine offline, between runs.

The with-learning error of system ``j`` is::

    e_j = Te1 e'_j + Te2 d_f,(j-1)
    Te1 = 1 - Gf_j L1 Gd_(j-1) Gd_j^-1,   Te2 = Gf_j (L1 Gf_(j-1) - L2)

with ``e'_j`` its error without learning.  With exact models both
operators vanish.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import lti_core as lti
from .lti_core import TransferFunction
from .loopmaps import closed_loop_maps
from .models import SystemModel, margin, extract_delta

__all__ = ["LearningPair", "ErrorPropagation", "SynthesisError", "synth_filters",
           "make_shaper", "learning_signal", "end_taper", "error_propagation",
           "predict_error", "SHAPER_CUTOFF"]

SHAPER_CUTOFF = 8.0


class SynthesisError(lti.LTIError):
    pass


@dataclass(frozen=True)
class LearningPair:
    l1: TransferFunction
    l2: TransferFunction
    shaper: TransferFunction
    source_label: str
    target_label: str

    @property
    def ts(self):
        return self.l1.ts

    def to_dict(self):
        return {"source_label": self.source_label, "target_label": self.target_label,
                "l1": self.l1.to_dict(), "l2": self.l2.to_dict(),
                "shaper": self.shaper.to_dict()}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        tf = TransferFunction.from_dict
        return cls(tf(d["l1"]), tf(d["l2"]), tf(d["shaper"]),
                   d["source_label"], d["target_label"])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def make_shaper(ts, cutoff=SHAPER_CUTOFF):
    """Second-order Butterworth low-pass with unit DC gain.

    Applied forward and backward, so the net response is its squared
    magnitude with zero phase.  ``cutoff=None`` gives the identity.
    """
    if cutoff is None:
        return TransferFunction.constant(1.0, ts)
    if not 0 < cutoff < np.pi / ts:
        raise ValueError(f"shaper cutoff must lie in (0, {np.pi / ts:g}) rad/s")
    z, p, k = signal.butter(2, cutoff * ts / np.pi, output="zpk")
    return TransferFunction.from_zpk(z, p, k, 0, ts)


def synth_filters(prev: SystemModel, next: SystemModel, shaper_cutoff=SHAPER_CUTOFF) -> LearningPair:
    """Learning filters carrying `prev`'s data to `next`, from nominal maps."""
    if not np.isclose(prev.ts, next.ts, rtol=1e-12):
        raise lti.SampleTimeError("systems run at different sample times")
    hp = closed_loop_maps(prev, use_actual=False)
    hn = closed_loop_maps(next, use_actual=False)
    inner = hn.g_f * hp.g_d
    if inner.is_zero:
        raise SynthesisError(f"{prev.label} -> {next.label}: Gf Gd vanishes")
    l1 = lti.inv(inner) * hn.g_d
    l2 = l1 * hp.g_f
    return LearningPair(l1, l2, make_shaper(prev.ts, shaper_cutoff), prev.label, next.label)


def end_taper(n, ts, length):
    """Window equal to 1 except for a raised-cosine fade to 0 over the last `length` s."""
    w = np.ones(n)
    m = min(int(round(length / ts)), n)
    if m > 0:
        w[n - m:] = 0.5 * (1 + np.cos(np.pi * (np.arange(1, m + 1) / m)))
    return w


def learning_signal(pair: LearningPair, e_prev, d_f_prev=None, taper=0.0):
    """Learning signal for the target system from its predecessor's run.

    Parameters
    ----------
    pair : LearningPair
    e_prev, d_f_prev : array_like
        Predecessor's tracking error and learning signal.  `d_f_prev`
        defaults to zero (the predecessor ran without learning).
    taper : float
        Length in seconds of a raised-cosine fade applied at the end of the
        result.  The backward-running part of ``L1`` starts each record
        from rest at its last sample, so the tail is unreliable; fading it
        keeps that error from being amplified along the learning chain.
    """
    e_prev = np.asarray(e_prev, dtype=float)
    if d_f_prev is None:
        d_f_prev = np.zeros_like(e_prev)
    d_f_prev = np.asarray(d_f_prev, dtype=float)
    if e_prev.shape != d_f_prev.shape:
        raise ValueError(f"signal lengths differ: {e_prev.shape} vs {d_f_prev.shape}")
    x = lti.simulate_noncausal(pair.l1, e_prev)
    if np.any(d_f_prev):
        x = x + lti.simulate_noncausal(pair.l2, d_f_prev)
    # runs start from rest, so the record is extended by zeros
    out = lti.filtfilt_zero_phase(pair.shaper, x, padtype=None)
    if taper > 0:
        out = out * end_taper(out.size, pair.ts, taper)
    return out


@dataclass(frozen=True)
class ErrorPropagation:
    t_e1: TransferFunction
    t_e2: TransferFunction
    delta_norm: float
    margin: float
    bound_satisfied: bool
    # -2 Delta / (1 + P C) of the predecessor, the first-order small-error form
    small_delta: TransferFunction

    def to_dict(self):
        return {"t_e1": self.t_e1.to_dict(), "t_e2": self.t_e2.to_dict(),
                "delta_norm": self.delta_norm, "margin": self.margin,
                "bound_satisfied": self.bound_satisfied,
                "small_delta": self.small_delta.to_dict()}


def error_propagation(prev: SystemModel, next: SystemModel, pair: LearningPair) -> ErrorPropagation:
    """Operators mapping ``(e'_next, d_f,prev)`` to the with-learning error."""
    gp = closed_loop_maps(prev, use_actual=True)
    gn = closed_loop_maps(next, use_actual=True)
    if gn.g_d.is_zero:
        raise SynthesisError(f"{next.label}: Gd is identically zero")
    t_e1 = 1 - gn.g_f * pair.l1 * gp.g_d / gn.g_d
    t_e2 = gn.g_f * (pair.l1 * gp.g_f - pair.l2)
    delta = extract_delta(prev)
    dn = lti.hinf_norm(delta)
    mg = margin(prev)
    small = -2 * delta / (1 + prev.p_actual * prev.c)
    return ErrorPropagation(t_e1, t_e2, dn, mg, bool(dn < mg), small)


def predict_error(prop: ErrorPropagation, e_prime, d_f_prev=None, small_delta=False):
    """Predicted with-learning error ``Te1 e' + Te2 d_f,prev``.

    With `small_delta` the first-order form ``-2 Delta / (1 + P C) e'`` is
    returned instead.
    """
    e_prime = np.asarray(e_prime, dtype=float)
    if small_delta:
        return lti.simulate_noncausal(prop.small_delta, e_prime)
    out = lti.simulate_noncausal(prop.t_e1, e_prime)
    if d_f_prev is not None:
        d_f_prev = np.asarray(d_f_prev, dtype=float)
        if d_f_prev.shape != e_prime.shape:
            raise ValueError("e_prime and d_f_prev lengths differ")
        out = out + lti.simulate_noncausal(prop.t_e2, d_f_prev)
    return out
