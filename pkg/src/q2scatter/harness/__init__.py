"""Configuration, campaigns, persistence and the command-line interface."""

from .campaigns import (
    CAMPAIGN_RUNNERS,
    geometric_radii,
    kink_slopes,
    parallel_map,
    predicted_gain,
    run_campaign,
    run_epsilon_scan,
    run_oracle_compare,
    run_q2_scan,
    run_verify,
)
from .config import ExperimentConfig, apply_override, build_config, load_config
from .report import RunReport, Table, Verdict, persist_run

__all__ = [
    "CAMPAIGN_RUNNERS", "ExperimentConfig", "RunReport", "Table", "Verdict", "apply_override",
    "build_config", "geometric_radii", "kink_slopes", "load_config", "parallel_map", "persist_run",
    "predicted_gain", "run_campaign", "run_epsilon_scan", "run_oracle_compare", "run_q2_scan", "run_verify",
]
