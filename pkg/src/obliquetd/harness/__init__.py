"""Experiment harness: config parsing, the runner, CSV/figure output, CLI."""

from .config import ExperimentConfig, LearnerSpec, parse_config, parse_config_text
from .runner import CurvePoint, ExperimentResult, LearnerResult, prepare, run_experiment

__all__ = [
    "CurvePoint",
    "ExperimentConfig",
    "ExperimentResult",
    "LearnerResult",
    "LearnerSpec",
    "parse_config",
    "parse_config_text",
    "prepare",
    "run_experiment",
]
