"""Decision trees and random forests for regression and classification.

Splits minimize the weighted child impurity (SSE for regression, Gini for
classification). All tie-breaking is deterministic: candidate features are
scanned in ascending index order and only strict improvements are accepted,
so the lowest feature index wins ties.
"""
from __future__ import annotations

import numpy as np

N_CLASSES = 3


def gini_impurity(counts) -> float:
    """1 - sum p_i^2 over the class shares of one node."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p ** 2))


class DecisionTree:
    """A single CART-style tree grown to ``max_depth``."""

    def __init__(self, task: str = "regression", max_depth: int = 5,
                 max_features: int | None = None, n_classes: int = N_CLASSES,
                 rng: np.random.Generator | None = None):
        if task not in ("regression", "classification"):
            raise ValueError(f"unknown task: {task}")
        if max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        self.task = task
        self.max_depth = max_depth
        self.max_features = max_features
        self.n_classes = n_classes
        self.rng = rng if rng is not None else np.random.default_rng(0)
        # Flat node arrays: internal nodes carry (feature, threshold, children),
        # leaves carry feature -1 and a prediction value.
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _leaf_value(self, y: np.ndarray) -> float:
        if self.task == "regression":
            return float(np.mean(y))
        counts = np.bincount(y.astype(int), minlength=self.n_classes)
        return float(np.argmax(counts))  # argmax -> lowest class on ties

    def _best_split(self, x: np.ndarray, y: np.ndarray, feats: np.ndarray):
        """(feature, threshold, score) of the best strict partition, or None."""
        n = len(y)
        best = None
        best_score = np.inf
        if self.task == "classification":
            onehot = np.zeros((n, self.n_classes))
            onehot[np.arange(n), y.astype(int)] = 1.0
        for f in feats:
            xf = x[:, f]
            order = np.argsort(xf, kind="stable")
            xs = xf[order]
            valid = np.flatnonzero(xs[1:] > xs[:-1])
            if len(valid) == 0:
                continue
            sizes_l = (valid + 1).astype(float)
            sizes_r = n - sizes_l
            if self.task == "regression":
                ys = y[order]
                c1 = np.cumsum(ys)[valid]
                c2 = np.cumsum(ys ** 2)[valid]
                tot1 = float(np.sum(ys))
                tot2 = float(np.sum(ys ** 2))
                sse_l = c2 - c1 ** 2 / sizes_l
                sse_r = (tot2 - c2) - (tot1 - c1) ** 2 / sizes_r
                scores = sse_l + sse_r
            else:
                cum = np.cumsum(onehot[order], axis=0)[valid]
                tot = np.sum(onehot, axis=0)
                sq_l = np.sum(cum ** 2, axis=1) / sizes_l
                sq_r = np.sum((tot - cum) ** 2, axis=1) / sizes_r
                # weighted gini = n - sq_l - sq_r
                scores = n - sq_l - sq_r
            k = int(np.argmin(scores))
            if scores[k] < best_score:
                i = valid[k]
                a, b = xs[i], xs[i + 1]
                thr = a + (b - a) / 2.0
                if thr >= b:  # guard against rounding on adjacent floats
                    thr = a
                best_score = float(scores[k])
                best = (int(f), float(thr), best_score)
        return best

    def _grow(self, x: np.ndarray, y: np.ndarray, depth: int) -> int:
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        pure = (np.all(y == y[0]) if self.task == "classification"
                else float(np.ptp(y)) == 0.0)
        if depth >= self.max_depth or len(y) < 2 or pure:
            self.value[node] = self._leaf_value(y)
            return node
        d = x.shape[1]
        mf = d if self.max_features is None else min(self.max_features, d)
        if mf < d:
            feats = np.sort(self.rng.choice(d, mf, replace=False))
        else:
            feats = np.arange(d)
        split = self._best_split(x, y, feats)
        if split is None:
            self.value[node] = self._leaf_value(y)
            return node
        f, thr, _ = split
        mask = x[:, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow(x[mask], y[mask], depth + 1)
        self.right[node] = self._grow(x[~mask], y[~mask], depth + 1)
        return node

    def fit(self, x, y) -> "DecisionTree":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float if self.task == "regression" else int)
        if x.ndim != 2 or len(x) != len(y):
            raise ValueError("bad training data shapes")
        self.feature, self.threshold = [], []
        self.left, self.right, self.value = [], [], []
        self._grow(x, y, 0)
        return self

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(len(x))
        stack = [(0, np.arange(len(x)))]
        while stack:
            node, idx = stack.pop()
            if len(idx) == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[idx] = self.value[node]
                continue
            mask = x[idx, f] <= self.threshold[node]
            stack.append((self.left[node], idx[mask]))
            stack.append((self.right[node], idx[~mask]))
        return out

    def state_dict(self) -> dict:
        return {
            "task": self.task,
            "max_depth": self.max_depth,
            "n_classes": self.n_classes,
            "feature": list(self.feature),
            "threshold": list(self.threshold),
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
        }

    @classmethod
    def from_state(cls, state: dict) -> "DecisionTree":
        tree = cls(task=state["task"], max_depth=state["max_depth"],
                   n_classes=state["n_classes"])
        tree.feature = [int(v) for v in state["feature"]]
        tree.threshold = [float(v) for v in state["threshold"]]
        tree.left = [int(v) for v in state["left"]]
        tree.right = [int(v) for v in state["right"]]
        tree.value = [float(v) for v in state["value"]]
        return tree


class RandomForestModel:
    """Bootstrap ensemble of decision trees with random feature subsets."""

    def __init__(self, task: str = "regression", n_trees: int = 100,
                 max_depth: int = 5, max_features: int | str = "sqrt",
                 seed: int = 0, n_classes: int = N_CLASSES,
                 store_oob: bool = False):
        if n_trees < 1:
            raise ValueError("n_trees must be positive")
        self.task = task
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed
        self.n_classes = n_classes
        self.store_oob = store_oob
        self.trees: list[DecisionTree] = []
        self._oob_masks: list[np.ndarray] = []

    def _resolve_mf(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(round(np.sqrt(d))))
        mf = int(self.max_features)
        if mf < 1 or mf > d:
            raise ValueError(f"max_features {mf} out of range for d={d}")
        return mf

    def fit(self, x, y) -> "RandomForestModel":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float if self.task == "regression" else int)
        n, d = x.shape
        mf = self._resolve_mf(d)
        seq = np.random.SeedSequence(self.seed)
        self.trees = []
        self._oob_masks = []
        for child in seq.spawn(self.n_trees):
            rng = np.random.default_rng(child)
            boot = rng.integers(0, n, n)
            tree = DecisionTree(self.task, self.max_depth, mf,
                                self.n_classes, rng)
            tree.fit(x[boot], y[boot])
            self.trees.append(tree)
            if self.store_oob:
                mask = np.ones(n, dtype=bool)
                mask[boot] = False
                self._oob_masks.append(mask)
        return self

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        preds = np.stack([tree.predict(x) for tree in self.trees])
        if self.task == "regression":
            return preds.mean(axis=0)
        votes = np.zeros((len(x), self.n_classes))
        for row in preds.astype(int):
            votes[np.arange(len(x)), row] += 1.0
        return np.argmax(votes, axis=1).astype(float)

    def oob_predictions(self, x) -> np.ndarray:
        """Out-of-bag prediction per training row (NaN if never left out).

        Requires ``store_oob=True`` at fit time and the training matrix.
        """
        if not self._oob_masks:
            raise ValueError("forest was fitted without store_oob=True")
        x = np.asarray(x, dtype=float)
        n = len(x)
        if self.task == "regression":
            total = np.zeros(n)
            count = np.zeros(n)
            for tree, mask in zip(self.trees, self._oob_masks):
                total[mask] += tree.predict(x[mask])
                count[mask] += 1.0
            out = np.full(n, np.nan)
            seen = count > 0
            out[seen] = total[seen] / count[seen]
            return out
        votes = np.zeros((n, self.n_classes))
        count = np.zeros(n)
        for tree, mask in zip(self.trees, self._oob_masks):
            pred = tree.predict(x[mask]).astype(int)
            votes[np.flatnonzero(mask), pred] += 1.0
            count[mask] += 1.0
        out = np.full(n, np.nan)
        seen = count > 0
        out[seen] = np.argmax(votes[seen], axis=1).astype(float)
        return out

    def state_dict(self) -> dict:
        return {
            "task": self.task,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "max_features": self.max_features,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "trees": [t.state_dict() for t in self.trees],
        }

    @classmethod
    def from_state(cls, state: dict) -> "RandomForestModel":
        model = cls(task=state["task"], n_trees=state["n_trees"],
                    max_depth=state["max_depth"],
                    max_features=state["max_features"], seed=state["seed"],
                    n_classes=state["n_classes"])
        model.trees = [DecisionTree.from_state(s) for s in state["trees"]]
        return model
