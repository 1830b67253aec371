"""Uplink coexistence simulator: joint user grouping, hybrid beamforming
and power control on a shared mmWave band, with queue-aware scheduling."""

from .config import (PRESETS, Scenario, ScenarioError, dbm_to_mw,
                     load_scenario, make_scenario, mw_to_dbm, save_scenario,
                     with_overrides)
from .channel import (ChannelSet, Layout, SteeringVector, draw_channel_set,
                      draw_sv_channel, make_layout, steering, steering_array)
from .wigig import WiGigState, build_wigig_state, dft_codebook
from .queues import (ArrivalProcess, QueueState, drift_penalty_terms,
                     interference_mask, realized_drift_penalty, sic_order,
                     step_queues)
from .rates import (Decision, EffectiveGains, RateResult, effective_gains,
                    sinr_and_rate, wigig_interference)
from .baselines import (BaselineKind, baseline_decision, baseline_power,
                        chs_grouping, hbf_zf)
from .sim import (POLICIES, EpisodeResult, SPRecord, aggregate, run_episode,
                  run_monte_carlo)
from .report import emit_results

__version__ = "0.1.0"
