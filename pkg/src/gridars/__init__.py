"""Derivative-free policy search for smart-inverter cyber-attack defense.

Subpackages cover the searchable policies, the adaptive-moment and
gradient-ascent updates, the random-search training loop, the inverter and
observer dynamics, the linearized feeder environment, and a CLI for
reproducible experiment runs.
"""

from .optimizer import AdamState, adam_ascent_step, adam_step, sgd_ascent_step
from .policy import (NormalizerStats, PolicyParams, evaluate, load_checkpoint,
                     perturb, save_checkpoint, update_stats)
from .trainer import (IterationReport, RngStream, TrainConfig,
                      estimate_gradient, rollout, rs_gradient,
                      sample_directions, train)
from .inverter import InverterState, VVWCurve, vv_setpoint, vw_setpoint
from .observer import VoFilterState, vi_metric, vo_step
from .env import (AttackTemplates, EnvParams, EpisodeTrace, FeederEnv,
                  FeederModel, Observation, Scenario, ScenarioBands,
                  build_feeder, randomize_scenario, run_episode)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "adam_step", "adam_ascent_step", "sgd_ascent_step",
    "PolicyParams", "NormalizerStats", "evaluate", "perturb", "update_stats",
    "save_checkpoint", "load_checkpoint",
    "TrainConfig", "IterationReport", "RngStream", "train", "rollout",
    "sample_directions", "estimate_gradient", "rs_gradient",
    "VVWCurve", "InverterState", "vv_setpoint", "vw_setpoint",
    "VoFilterState", "vo_step", "vi_metric",
    "FeederModel", "Scenario", "ScenarioBands", "AttackTemplates", "EnvParams",
    "Observation", "EpisodeTrace", "FeederEnv", "build_feeder",
    "randomize_scenario", "run_episode",
    "__version__",
]
