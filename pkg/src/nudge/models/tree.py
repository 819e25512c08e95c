"""Squared-error regression trees stored as flat node arrays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAF = -1


@dataclass
class RegressionTree:
    """Binary tree; samples with ``x[feature] <= threshold`` go left.

    Node ``i`` is a leaf when ``feature[i] == -1``; its output is ``value[i]``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int
    _lists: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    @property
    def n_features_in(self) -> int:
        used = self.feature[self.feature != LEAF]
        return int(used.max()) + 1 if used.size else 0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.max_depth + 1):
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                break
            x = X[rows, np.where(internal, feat, 0)]
            go_left = x <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)
        return self.value[node]

    def predict_one(self, x) -> float:
        """Pure-Python walk for a single sample; much cheaper than :meth:`predict` per call."""
        if self._lists is None:
            self._lists = (
                self.feature.tolist(), self.threshold.tolist(),
                self.left.tolist(), self.right.tolist(), self.value.tolist(),
            )
        feature, threshold, left, right, value = self._lists
        i = 0
        while feature[i] != LEAF:
            i = left[i] if x[feature[i]] <= threshold[i] else right[i]
        return value[i]

    def leaf_index(self, x) -> int:
        i = 0
        while self.feature[i] != LEAF:
            i = int(self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i])
        return i

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegressionTree":
        tree = cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=float),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            value=np.asarray(data["value"], dtype=float),
            max_depth=int(data["max_depth"]),
        )
        tree.validate()
        return tree

    def validate(self) -> None:
        n = self.n_nodes
        if n == 0 or not (len(self.threshold) == len(self.left) == len(self.right) == len(self.value) == n):
            raise ValueError("tree arrays have inconsistent lengths")
        reached = np.zeros(n, dtype=bool)
        stack = [(0, 0)]
        while stack:
            i, depth = stack.pop()
            if reached[i] or depth > self.max_depth:
                raise ValueError("tree is not a proper binary tree within max_depth")
            reached[i] = True
            if self.feature[i] != LEAF:
                if not np.isfinite(self.threshold[i]):
                    raise ValueError("non-finite threshold")
                for child in (self.left[i], self.right[i]):
                    if not 0 < child < n:
                        raise ValueError("child index out of range")
                    stack.append((int(child), depth + 1))
        if not reached.all():
            raise ValueError("unreachable nodes")


def _best_split(X: np.ndarray, y: np.ndarray, min_samples_leaf: int):
    """Return ``(feature, threshold, gain)`` of the best SSE-reducing split, or None."""
    n, p = X.shape
    if n < 2 * min_samples_leaf:
        return None
    y = y - y.mean()  # gains are shift-invariant; centring avoids cancellation
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)[:-1]
    total = ys.sum(axis=0)
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    # SSE reduction relative to the parent, up to the constant total^2/n
    score = csum**2 / n_left + (total - csum) ** 2 / n_right
    valid = xs[1:] > xs[:-1]
    if min_samples_leaf > 1:
        ok = (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        valid &= ok
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score.T))  # feature-major: lowest feature index wins ties
    j, i = divmod(flat, n - 1)
    gain = score[i, j] - total[j] ** 2 / n
    if not gain > 1e-12 * max(1.0, float(y @ y)):
        return None
    threshold = 0.5 * (xs[i, j] + xs[i + 1, j])
    if threshold >= xs[i + 1, j]:  # midpoint rounded up onto the right value
        threshold = xs[i, j]
    return j, float(threshold), float(gain)


def fit_tree(X: np.ndarray, y: np.ndarray, max_depth: int = 3, min_samples_leaf: int = 1) -> RegressionTree:
    """Greedy depth-limited CART fit minimising squared error."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        if depth >= max_depth:
            return node
        split = _best_split(X[idx], y[idx], min_samples_leaf)
        if split is None:
            return node
        j, thr, _ = split
        mask = X[idx, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
        max_depth=max_depth,
    )
