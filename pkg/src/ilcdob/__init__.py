"""Cross-system iterative learning on top of disturbance-observer loops.

Discrete-time transfer-function algebra, models of three small UAVs in
their x-axis position loop, the closed-loop maps of the observer-augmented
loop, learning filters that transfer one system's experience to the next,
and a harness for cyclic learning campaigns.
"""
from .lti_core import TransferFunction, FrequencyResponse
from .models import SystemSpec, SystemModel, DEFAULT_SPECS, build_system, perturb, margin
from .loopmaps import ClosedLoopMaps, RunRecord, closed_loop_maps, simulate_closed_loop
from .learning import LearningPair, ErrorPropagation, synth_filters, learning_signal
from .learning import error_propagation, predict_error
from .scenarios import Scenario, NoiseSpec, make_scenario, add_noise, rmse
from .harness import CampaignConfig, CampaignReport, run_campaign

__version__ = "0.1.0"
