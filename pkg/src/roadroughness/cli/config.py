"""Pipeline configuration: JSON file merged over defaults."""
from __future__ import annotations

import json
import math
from pathlib import Path

DEFAULT_CONFIG = {
    "workdir": "run",
    "seed": 7,
    "train_frac": 0.8,
    "simulate": {
        "route_length_m": 42000.0,
        "profile_dx_m": 0.05,
        "roughness_coeff": 16e-6,
        "envelope_period_m": 400.0,
        "envelope_min": 0.25,
        "envelope_max": 1.8,
        "speed_ms": 13.9,
        "acc_rate_hz": 50.0,
        "gps_rate_hz": 1.0,
        "gps_noise_sigma_m": 3.0,
        "acc_noise_sigma": 0.03,
        "segment_length_m": 10.0,
        "vehicle_perturbation": 0.1,
    },
    "match": {
        "sigma_m": 4.07,
        "beta_m": 20.0,
        "max_candidates": 8,
        "radius_m": 50.0,
    },
    "align": {
        "window_pieces": 10,
        "search_back_m": 100.0,
        "search_ahead_m": 2000.0,
    },
    "featurize": {
        "target_len": 250,
    },
    "select": {
        "k_folds": 5,
        "max_features": 10,
        "sfs_trees": 20,
        "sfs_depth": 6,
        "sfs_max_rows": 1500,
        "pca_variance": 0.99,
    },
    "train": {
        "k_folds": 5,
        "adasyn": True,
        "regression_families": ["baseline", "ridge", "lasso", "elastic_net",
                                "knn", "random_forest", "svm", "mlp"],
        "classification_families": ["baseline", "logistic", "knn",
                                    "gaussian_nb", "random_forest", "svm",
                                    "mlp"],
        "grids": {},
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path=None, seed=None, workdir=None) -> dict:
    """Merge a JSON config file (if any) over the defaults, then apply
    command-line overrides."""
    config = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    if path is not None:
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"config file not found: {file_path}")
        config = _merge(config, json.loads(file_path.read_text("utf-8")))
    if seed is not None:
        config["seed"] = seed
    if workdir is not None:
        config["workdir"] = str(workdir)
    validate_config(config)
    return config


def validate_config(config: dict) -> None:
    if not isinstance(config.get("seed"), int):
        raise ValueError("seed must be an integer")
    if not 0.0 < config["train_frac"] < 1.0:
        raise ValueError("train_frac must be in (0, 1)")
    sim = config["simulate"]
    for key in ("route_length_m", "profile_dx_m", "speed_ms", "acc_rate_hz",
                "gps_rate_hz", "segment_length_m", "envelope_period_m"):
        v = sim[key]
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ValueError(f"simulate.{key} must be a positive number")
    if sim["envelope_min"] <= 0 or sim["envelope_max"] < sim["envelope_min"]:
        raise ValueError("envelope bounds must satisfy 0 < min <= max")
    if config["select"]["k_folds"] < 2 or config["train"]["k_folds"] < 2:
        raise ValueError("k_folds must be at least 2")
