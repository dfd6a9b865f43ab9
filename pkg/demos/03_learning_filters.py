"""Learning across vehicles: filters, one learning pass, error propagation.

Run with ``python3 demos/03_learning_filters.py``.
"""
import numpy as np

from ilcdob import (DEFAULT_SPECS, build_system, error_propagation, learning_signal,
                    make_scenario, perturb, predict_error, simulate_closed_loop,
                    synth_filters)
from ilcdob import lti_core as lti

uav1, uav2, _ = (build_system(s) for s in DEFAULT_SPECS)
scen = make_scenario(2)          # circle with sinusoidal disturbance
win = (scen.t >= 10) & (scen.t < scen.duration - 5)


def rms(x):
    return float(np.sqrt(np.mean(x[win] ** 2)))


# %% Filters from UAV1 to UAV2: L1 maps the error, L2 the learning signal
pair = synth_filters(uav1, uav2)
print("L1 lag (negative = look-ahead):", pair.l1.lag)
print("L1 poles:", np.round(pair.l1.poles.real, 3))
print("|L1| at 0.1, 1, 6 rad/s (dB):",
      np.round(lti.freq_response(pair.l1, [0.1, 1.0, 6.0]).mag_db, 1))

# %% One learning pass with exact models
src = simulate_closed_loop(uav1, scen.r, scen.d)
d_f = learning_signal(pair, src.e, taper=2.0)
base = simulate_closed_loop(uav2, scen.r, scen.d)
learned = simulate_closed_loop(uav2, scen.r, scen.d, d_f)
print(f"\nUAV2 RMSE without learning {rms(base.e):.4f} m, with {rms(learned.e):.2e} m")

# %% With a 10 % gain error on UAV1, the pass is no longer exact
bad1 = perturb(uav1, 0.1)
pair = synth_filters(bad1, uav2, shaper_cutoff=None)
prop = error_propagation(bad1, uav2, pair)
print(f"\n||Delta|| = {prop.delta_norm:.2f} < margin {prop.margin:.3f}: {prop.bound_satisfied}")
print("peak |T_e1| =", round(lti.hinf_norm(prop.t_e1), 4))

hover = make_scenario(1)
src = simulate_closed_loop(bad1, hover.r, hover.d)
base = simulate_closed_loop(uav2, hover.r, hover.d)
learned = simulate_closed_loop(uav2, hover.r, hover.d, learning_signal(pair, src.e))
pred = predict_error(prop, base.e)
print(f"hover: e' {rms(base.e):.2e} m, e {rms(learned.e):.2e} m, "
      f"T_e1 prediction {rms(pred):.2e} m")
print(f"first-order estimate -2 Delta/(1 + CP): "
      f"{rms(predict_error(prop, base.e, small_delta=True)):.2e} m")
