"""Configuration-driven pipeline orchestration and artifact formats."""

from .config import DEFAULT_CONFIG, load_config
from .pipeline import (StageError, apply_selection, bundle_model,
                       bundle_predict, export_report, run_pipeline,
                       run_stage)

__all__ = [
    "DEFAULT_CONFIG", "load_config", "StageError", "apply_selection",
    "bundle_model", "bundle_predict", "export_report", "run_pipeline",
    "run_stage",
]
