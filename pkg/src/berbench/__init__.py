"""Monte Carlo benchmark of Bayes error rate estimators on synthetic two-class data."""

from .ground_truth import (
    CalibratedParameterTable,
    GroundTruthEntry,
    bayes_classify,
    calibrate,
    mc_ber,
    select_uniform,
)
from .scenarios import ScenarioSpec, build_scenario, log_pdf, sample, sample_dataset

__version__ = "0.1.0"

__all__ = [
    "CalibratedParameterTable",
    "GroundTruthEntry",
    "ScenarioSpec",
    "bayes_classify",
    "build_scenario",
    "calibrate",
    "log_pdf",
    "mc_ber",
    "sample",
    "sample_dataset",
    "select_uniform",
]
