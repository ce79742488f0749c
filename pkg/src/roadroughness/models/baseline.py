"""Constant-output reference models."""
from __future__ import annotations

import numpy as np

from .tree import N_CLASSES


class BaselineModel:
    """Predicts the train mean (regression) or majority class (classification),
    with class ties resolved to the lower ordinal."""

    def __init__(self, task: str = "regression", n_classes: int = N_CLASSES):
        if task not in ("regression", "classification"):
            raise ValueError(f"unknown task: {task}")
        self.task = task
        self.n_classes = n_classes
        self.constant: float | None = None

    def fit(self, x, y) -> "BaselineModel":
        y = np.asarray(y)
        if len(y) == 0:
            raise ValueError("empty training set")
        if self.task == "regression":
            self.constant = float(np.mean(y))
        else:
            counts = np.bincount(y.astype(int), minlength=self.n_classes)
            self.constant = float(np.argmax(counts))
        return self

    def predict(self, x) -> np.ndarray:
        if self.constant is None:
            raise ValueError("model is not fitted")
        return np.full(len(np.asarray(x)), self.constant)

    def state_dict(self) -> dict:
        return {"task": self.task, "n_classes": self.n_classes,
                "constant": self.constant}

    @classmethod
    def from_state(cls, state: dict) -> "BaselineModel":
        model = cls(state["task"], state["n_classes"])
        model.constant = state["constant"]
        return model
