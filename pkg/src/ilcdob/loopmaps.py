"""Closed-loop maps of the observer-augmented loop and two ways to simulate it.

With ``D = 1 - Q + P (M + C)`` the output is::

    y = (P C / D) r + (P (1 - Q) / D) d + (-P / D) d_f

and the observer's estimate of the disturbance is ``((M + Q C) P / D) d``
when no learning signal is applied.  The loop wiring behind these maps is::

    e   = r - y
    u1  = C e
    dh' = M y - Q u2            (observer estimate)
    u2  = u1 - dh' - d_f
    y   = P (u2 + d)

`simulate_closed_loop` filters the inputs through the closed-form maps.
`block_diagram_oracle` steps the wiring above sample by sample and exists
to cross-check it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import lti_core as lti
from .lti_core import TransferFunction
from .models import SystemModel, ModelError
from .scenarios import rmse as _rmse

__all__ = ["ClosedLoopMaps", "RunRecord", "AlgebraicLoopError", "closed_loop_maps",
           "simulate_closed_loop", "block_diagram_oracle", "RUN_COLUMNS"]

RUN_COLUMNS = ("t", "r", "y", "e", "d", "d_hat", "d_f", "u1", "u2")


class AlgebraicLoopError(ModelError):
    pass


@dataclass(frozen=True)
class ClosedLoopMaps:
    g_r: TransferFunction
    g_d: TransferFunction
    g_f: TransferFunction
    omega: TransferFunction
    # maps from (r, d, d_f) to the combined plant command u2
    u_r: TransferFunction = field(repr=False)
    u_d: TransferFunction = field(repr=False)
    u_f: TransferFunction = field(repr=False)

    def unstable(self):
        """Names of the maps with a pole on or outside the unit circle."""
        names = ("g_r", "g_d", "g_f", "omega")
        return [n for n in names if not lti.is_stable(getattr(self, n))]

    def as_dict(self):
        return {"G_r": self.g_r, "G_d": self.g_d, "G_f": self.g_f, "Omega": self.omega}


def closed_loop_maps(model: SystemModel, use_actual=True) -> ClosedLoopMaps:
    """Closed-form maps of `model` built on the actual or the nominal plant."""
    p = model.p_actual if use_actual else model.p_hat
    c, q, m = model.c, model.q, model.m
    dinv = 1 / _denominator(p, c, q, m)
    g_r = p * c * dinv
    g_d = p * (1 - q) * dinv
    g_f = -p * dinv
    omega = (m + q * c) * p * dinv
    u_r = c * dinv
    u_d = -p * (m + c) * dinv
    u_f = -dinv
    return ClosedLoopMaps(g_r, g_d, g_f, omega, u_r, u_d, u_f)


def _denominator(p, c, q, m):
    den = 1 - q + p * (m + c)
    if den.is_zero:
        raise ModelError("closed-loop denominator 1 - Q + P (M + C) vanishes")
    return den


@dataclass(frozen=True)
class RunRecord:
    """Stored series of one closed-loop run.

    ``d_hat`` is the total correction subtracted from the controller command,
    the observer estimate plus the learning signal.
    """

    t: np.ndarray
    r: np.ndarray
    y: np.ndarray
    e: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray
    d_f: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    label: str = ""
    condition: str = ""

    @property
    def ts(self):
        return float(self.t[1] - self.t[0])

    def rmse(self, settle=10.0, guard=0.0):
        return _rmse(self.e, self.ts, settle, guard)

    def to_csv(self, path):
        data = np.column_stack([getattr(self, c) for c in RUN_COLUMNS])
        np.savetxt(path, data, delimiter=",", header=",".join(RUN_COLUMNS),
                   comments="", fmt="%.12g")

    @classmethod
    def from_csv(cls, path, label="", condition=""):
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        if tuple(h.strip() for h in header) != RUN_COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(RUN_COLUMNS)}")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(*(data[:, i] for i in range(len(RUN_COLUMNS))),
                   label=label, condition=condition)


def _inputs(r, d, d_f):
    r = np.asarray(r, dtype=float)
    d = np.asarray(d, dtype=float)
    d_f = np.zeros_like(r) if d_f is None else np.asarray(d_f, dtype=float)
    if not (r.shape == d.shape == d_f.shape) or r.ndim != 1:
        raise ValueError(f"signal lengths differ: r {r.shape}, d {d.shape}, d_f {d_f.shape}")
    return r, d, d_f


def simulate_closed_loop(model: SystemModel, r, d, d_f=None, maps=None,
                         label=None, condition="") -> RunRecord:
    """Run the actual plant's loop from zero initial conditions.

    Parameters
    ----------
    model : SystemModel
    r, d : array_like
        Reference position and input disturbance sampled at ``model.ts``.
    d_f : array_like, optional
        Learning signal; zero when omitted.
    maps : ClosedLoopMaps, optional
        Precomputed ``closed_loop_maps(model, use_actual=True)``.
    """
    r, d, d_f = _inputs(r, d, d_f)
    if maps is None:
        maps = closed_loop_maps(model, use_actual=True)
    sim = lti.simulate
    y = sim(maps.g_r, r) + sim(maps.g_d, d) + sim(maps.g_f, d_f)
    e = r - y
    u1 = sim(model.c, e)
    u2 = sim(maps.u_r, r) + sim(maps.u_d, d) + sim(maps.u_f, d_f)
    t = np.arange(r.size) * model.ts
    return RunRecord(t, r, y, e, d, u1 - u2, d_f, u1, u2,
                     label=model.label if label is None else label, condition=condition)


class _Filter:
    """Transposed direct-form II filter stepped one sample at a time."""

    def __init__(self, g: TransferFunction):
        if not g.is_causal:
            raise lti.NonCausalError("loop blocks must be causal")
        if g.is_zero:
            b, a = np.zeros(1), np.ones(1)
        else:
            b = np.asarray(g.num, dtype=float)
            a = np.asarray(g.den, dtype=float)
            n = max(b.size, a.size)
            b = np.pad(b, (0, n - b.size))
            a = np.pad(a, (0, n - a.size))
            b, a = b / a[0], a / a[0]
        self.b, self.a = b, a
        self.z = np.zeros(max(b.size - 1, 0))

    @property
    def feedthrough(self):
        return self.b[0]

    @property
    def free(self):
        """Output contribution of the current state alone."""
        return self.z[0] if self.z.size else 0.0

    def step(self, x):
        y = self.b[0] * x + self.free
        z = self.z
        for i in range(z.size):
            nxt = z[i + 1] if i + 1 < z.size else 0.0
            z[i] = self.b[i + 1] * x + nxt - self.a[i + 1] * y
        return y


def block_diagram_oracle(model: SystemModel, r, d, d_f=None) -> dict:
    """Simulate the loop wiring sample by sample on the actual plant.

    Returns a dict with the series ``y, e, u1, u2, d_hat``.  The observer's
    feedthrough term ``Q u2`` is solved in closed form each step; a plant
    with direct feedthrough would close an unsolvable algebraic loop.
    """
    r, d, d_f = _inputs(r, d, d_f)
    p, c, q, m = (_Filter(g) for g in (model.p_actual, model.c, model.q, model.m))
    if p.feedthrough != 0.0:
        raise AlgebraicLoopError("plant has direct feedthrough")
    q0 = q.feedthrough
    if abs(1.0 - q0) < 1e-12:
        raise AlgebraicLoopError("observer low-pass has unit feedthrough")
    n = r.size
    out = {k: np.zeros(n) for k in ("y", "e", "u1", "u2", "d_hat")}
    for k in range(n):
        y = p.free
        e = r[k] - y
        u1 = c.step(e)
        my = m.step(y)
        u2 = (u1 - my + q.free - d_f[k]) / (1.0 - q0)
        qu = q.step(u2)
        p.step(u2 + d[k])
        out["y"][k] = y
        out["e"][k] = e
        out["u1"][k] = u1
        out["u2"][k] = u2
        # observer estimate plus learning signal
        out["d_hat"][k] = my - qu + d_f[k]
    return out
