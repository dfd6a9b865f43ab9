"""Transfer-function algebra in z^-1 with exact root bookkeeping.

Run with ``python3 demos/01_transfer_functions.py``.
"""
import numpy as np

from ilcdob import lti_core as lti

TS = 0.02

# %% Build blocks from roots or from coefficients
lowpass = lti.TransferFunction.from_zpk([-1.0], [0.8], 0.1, lag=0, ts=TS)
integ = lti.TransferFunction([TS], [1.0, -1.0], TS)          # TS / (1 - z^-1)
print("lowpass:", lowpass)
print("integrator poles:", integ.poles)

# %% Products concatenate roots, so a block times its inverse is exactly one
g = lowpass * integ
print("g * inv(g) is one:", lti.approx_eq(g * lti.inv(g), lti.TransferFunction.constant(1.0, TS)))

# %% Feedback and frequency response
loop = lti.feedback(3.0 * g, 1.0)
fr = lti.freq_response(loop, [0.1, 1.0, 10.0])
for w, m, p in zip(fr.omegas, fr.mag_db, fr.phase_deg):
    print(f"  w = {w:5.1f} rad/s   |T| = {m:7.3f} dB   phase = {p:8.2f} deg")
print("H-infinity norm:", round(lti.hinf_norm(loop), 4))

# %% Non-minimum-phase zeros: a non-causal but bounded inverse
nmp = lti.TransferFunction.from_zpk([-3.5], [0.5], 1.0, lag=1, ts=TS)
inv = lti.inv(nmp)
print("inverse causal?", inv.is_causal, " lag:", inv.lag)
x = np.sin(0.3 * np.arange(400))
y = lti.simulate(nmp, x)
x_back = lti.simulate_noncausal(inv, y)
print("two-sided inverse recovers the input to", np.max(np.abs(x_back[:-30] - x[:-30])))

# %% The stable (ZPETC-style) inverse is causal after a known delay r.
# Undoing that delay leaves a real, zero-phase response with unit DC gain.
approx, r = lti.stable_inverse(nmp, return_delay=True)
w = np.array([0.01, 1.0, 10.0, 100.0])
resp = lti.freq_response(approx * nmp * lti.delay(-r, TS), w).values
print("delay r =", r, " zero-phase remainder:", np.round(resp.real, 4),
      " max |imag|:", f"{np.max(np.abs(resp.imag)):.1e}")
