"""Pilot assignment lab for cell-free massive MIMO.

Closed-form downlink throughput, model-based pilot assigners, a small quantum
circuit simulator, and a hybrid quantum-classical model trained with
parameter-shift gradients.
"""

from .config import SystemConfig, downlink_snr, noise_power, pilot_snr
from .scenario import (ChannelStats, Topology, channel_stats, generate_topology,
                       lsf_matrix, path_loss_db, power_control)
from .throughput import (RateReport, copilot_matrix, soft_channel_stats,
                         soft_sum_rate, soft_sum_rate_grad, sum_rate, user_rate)
from .baselines import (AssignerResult, exhaustive_search, greedy_assignment,
                        location_based_assignment, master_ap_assignment,
                        random_assignment)
from .models import (CnnModel, HqcnnModel, MlpModel, count_parameters,
                     hard_decision, load_checkpoint, save_checkpoint)
from .estimator import LearnedPilotAssigner
from .training import TrainingConfig, TrainingHistory, train

__all__ = [
    "SystemConfig", "noise_power", "pilot_snr", "downlink_snr",
    "Topology", "ChannelStats", "generate_topology", "path_loss_db",
    "lsf_matrix", "channel_stats", "power_control",
    "RateReport", "copilot_matrix", "user_rate", "sum_rate",
    "soft_channel_stats", "soft_sum_rate", "soft_sum_rate_grad",
    "AssignerResult", "random_assignment", "greedy_assignment",
    "master_ap_assignment", "location_based_assignment", "exhaustive_search",
    "HqcnnModel", "MlpModel", "CnnModel", "count_parameters", "hard_decision",
    "save_checkpoint", "load_checkpoint",
    "LearnedPilotAssigner", "TrainingConfig", "TrainingHistory", "train",
]
