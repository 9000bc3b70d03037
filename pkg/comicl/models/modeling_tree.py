# Copyright 2022 The comicl Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
from typing import List

import numpy as np
from sklearn.linear_model import Ridge

from ..utils import logging
from .modeling_base import PredictorWrapper


logger = logging.get_logger(__name__)

LEAF = -1
COMBINATIONS = ("average", "boosted", "single")
ENSEMBLE_KINDS = ("cart", "forest", "gbt", "lmdt")
SPLIT_GAIN_RTOL = 1e-12


class Tree(object):
    r"""
    Binary regression tree stored as flat node arrays. A point goes to the left child when
    `x[feature] <= threshold`. Leaves hold a constant, or an intercept plus a coefficient vector for
    linear-model trees.

    Args:
        feature (`np.ndarray`): split feature per node, `-1` for leaves.
        threshold (`np.ndarray`): split threshold per node (ignored for leaves).
        children_left (`np.ndarray`): left child per node, `-1` for leaves.
        children_right (`np.ndarray`): right child per node, `-1` for leaves.
        value (`np.ndarray`): leaf constant, or leaf intercept when `coef` is given.
        n_features (`int`): input dimension.
        coef (`np.ndarray`, *optional*): `(n_nodes, n_features)` leaf coefficients.
    """

    def __init__(self, feature, threshold, children_left, children_right, value, n_features, coef=None):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.children_left = np.asarray(children_left, dtype=np.int64)
        self.children_right = np.asarray(children_right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.n_features = int(n_features)
        self.coef = None if coef is None else np.asarray(coef, dtype=np.float64).reshape(-1, self.n_features)

        n_nodes = self.feature.shape[0]
        for name in ("threshold", "children_left", "children_right", "value"):
            if getattr(self, name).shape != (n_nodes,):
                raise ValueError(f"{name} must have one entry per node ({n_nodes})")
        if self.coef is not None and self.coef.shape[0] != n_nodes:
            raise ValueError(f"coef must have one row per node ({n_nodes})")
        for node in range(n_nodes):
            left, right = self.children_left[node], self.children_right[node]
            if (left == LEAF) != (right == LEAF):
                raise ValueError(f"node {node} must have exactly zero or two children")
            if left == LEAF:
                if not np.isfinite(self.value[node]):
                    raise ValueError(f"leaf {node} has a non-finite payload")
                if self.coef is not None and not np.all(np.isfinite(self.coef[node])):
                    raise ValueError(f"leaf {node} has non-finite coefficients")
            else:
                if not 0 <= self.feature[node] < self.n_features:
                    raise ValueError(f"node {node} splits on feature {self.feature[node]} out of range")
                if not np.isfinite(self.threshold[node]):
                    raise ValueError(f"node {node} has a non-finite threshold")

    @classmethod
    def leaf(cls, value, n_features, coef=None):
        coef = None if coef is None else np.asarray(coef, dtype=np.float64).reshape(1, -1)
        return cls([LEAF], [0.0], [LEAF], [LEAF], [value], n_features, coef=coef)

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def is_linear(self):
        return self.coef is not None

    def is_leaf(self, node):
        return self.children_left[node] == LEAF

    @property
    def leaves(self) -> List[int]:
        return [node for node in range(self.n_nodes) if self.is_leaf(node)]

    @property
    def depth(self):
        def rec(node):
            if self.is_leaf(node):
                return 0
            return 1 + max(rec(self.children_left[node]), rec(self.children_right[node]))

        return rec(0)

    def splits(self):
        """`(node, feature, threshold)` for every internal node."""
        return [
            (node, int(self.feature[node]), float(self.threshold[node]))
            for node in range(self.n_nodes)
            if not self.is_leaf(node)
        ]

    def leaves_under(self, node) -> List[int]:
        if self.is_leaf(node):
            return [node]
        return self.leaves_under(self.children_left[node]) + self.leaves_under(self.children_right[node])

    def apply(self, X):
        """Leaf index reached by every row of `X`."""
        X = np.array(X, dtype=np.float64, ndmin=2)
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = ~np.array([self.is_leaf(n) for n in nodes], dtype=bool)
        while np.any(active):
            rows = np.where(active)[0]
            current = nodes[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            nodes[rows] = np.where(go_left, self.children_left[current], self.children_right[current])
            active[rows] = self.children_left[nodes[rows]] != LEAF
        return nodes

    def leaf_output(self, leaf, X):
        X = np.array(X, dtype=np.float64, ndmin=2)
        if self.coef is None:
            return np.full(X.shape[0], self.value[leaf])
        return X @ self.coef[leaf] + self.value[leaf]

    def predict(self, X):
        X = np.array(X, dtype=np.float64, ndmin=2)
        leaves = self.apply(X)
        if self.coef is None:
            return self.value[leaves]
        return np.einsum("ij,ij->i", X, self.coef[leaves]) + self.value[leaves]

    def leaf_range(self, leaf, lower, upper):
        """Interval of the leaf payload over the box `[lower, upper]`."""
        if self.coef is None:
            return float(self.value[leaf]), float(self.value[leaf])
        coef = self.coef[leaf]
        lo = self.value[leaf] + np.sum(np.where(coef > 0, coef * lower, coef * upper))
        hi = self.value[leaf] + np.sum(np.where(coef > 0, coef * upper, coef * lower))
        return float(lo), float(hi)

    def to_dict(self):
        def rec(node):
            if self.is_leaf(node):
                record = {"value": float(self.value[node])}
                if self.coef is not None:
                    record["coef"] = self.coef[node].tolist()
                return record
            return {
                "feature": int(self.feature[node]),
                "threshold": float(self.threshold[node]),
                "left": rec(self.children_left[node]),
                "right": rec(self.children_right[node]),
            }

        return rec(0)

    @classmethod
    def from_dict(cls, payload, n_features):
        feature, threshold, left, right, value, coef = [], [], [], [], [], []
        linear = False

        def rec(record):
            nonlocal linear
            node = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(0.0)
            coef.append(np.zeros(n_features))
            if "left" in record:
                feature[node] = record["feature"]
                threshold[node] = record["threshold"]
                left[node] = rec(record["left"])
                right[node] = rec(record["right"])
            else:
                value[node] = record["value"]
                if "coef" in record:
                    linear = True
                    coef[node] = np.asarray(record["coef"], dtype=np.float64)
            return node

        rec(payload)
        return cls(feature, threshold, left, right, value, n_features, coef=np.array(coef) if linear else None)


class Ensemble(PredictorWrapper):
    r"""
    Tree ensemble with an exact additive forward pass.

    Args:
        trees (`List[Tree]`):
            Member trees, all with the same input dimension.
        combination (`str`):
            `"average"` (random forest), `"boosted"` (gradient boosting) or `"single"` (CART / LMDT).
        kind (`str`, *optional*, defaults to `"cart"`):
            Predictor family, recorded for reports.
        learning_rate (`float`, *optional*, defaults to 1.0):
            Stage weight of boosted ensembles.
        base_score (`float`, *optional*, defaults to 0.0):
            Initial prediction of boosted ensembles.
    """
    model_type = "tree_ensemble"

    def __init__(self, trees, combination, kind="cart", learning_rate=1.0, base_score=0.0):
        if len(trees) == 0:
            raise ValueError("an ensemble needs at least one tree")
        if combination not in COMBINATIONS:
            raise ValueError(f"combination must be one of {COMBINATIONS} - got {combination}")
        if kind not in ENSEMBLE_KINDS:
            raise ValueError(f"kind must be one of {ENSEMBLE_KINDS} - got {kind}")
        if combination == "single" and len(trees) != 1:
            raise ValueError(f"a single-tree ensemble holds exactly one tree - got {len(trees)}")
        if len(set(tree.n_features for tree in trees)) != 1:
            raise ValueError("all trees must share the same number of features")
        self.trees = list(trees)
        self.combination = combination
        self.kind = kind
        self.learning_rate = float(learning_rate)
        self.base_score = float(base_score)

    @classmethod
    def from_tree(cls, tree: Tree, kind="cart"):
        return cls([tree], combination="single", kind=kind)

    @property
    def n_features(self):
        return self.trees[0].n_features

    @property
    def tree_weights(self):
        if self.combination == "average":
            return [1.0 / len(self.trees)] * len(self.trees)
        if self.combination == "boosted":
            return [self.learning_rate] * len(self.trees)
        return [1.0]

    @property
    def offset(self):
        return self.base_score if self.combination == "boosted" else 0.0

    def predict(self, X):
        X = np.array(X, dtype=np.float64, ndmin=2)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features - got {X.shape[1]}")
        if self.combination == "average":
            return np.mean([tree.predict(X) for tree in self.trees], axis=0)
        if self.combination == "boosted":
            return self.base_score + self.learning_rate * np.sum([tree.predict(X) for tree in self.trees], axis=0)
        return self.trees[0].predict(X)

    def staged_predict(self, X):
        """Predictions after each boosting stage."""
        if self.combination != "boosted":
            raise ValueError("staged_predict is only defined for boosted ensembles")
        current = np.full(np.array(X, ndmin=2).shape[0], self.base_score)
        for tree in self.trees:
            current = current + self.learning_rate * tree.predict(X)
            yield current

    def _to_dict(self):
        return {
            "kind": self.kind,
            "combination": self.combination,
            "learning_rate": self.learning_rate,
            "base_score": self.base_score,
            "n_features": self.n_features,
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def _from_dict(cls, payload):
        n_features = payload["n_features"]
        return cls(
            [Tree.from_dict(record, n_features) for record in payload["trees"]],
            combination=payload["combination"],
            kind=payload.get("kind", "cart"),
            learning_rate=payload.get("learning_rate", 1.0),
            base_score=payload.get("base_score", 0.0),
        )


def _check_data(data):
    if data.n_rows < 1:
        raise ValueError("cannot fit on an empty dataset")
    if data.task != "regression":
        raise ValueError("tree predictors are fitted to regression targets only")
    return np.asarray(data.features), np.asarray(data.targets, dtype=np.float64)


def _check_depth(max_depth):
    if max_depth < 0:
        raise ValueError(f"max_depth must be >= 0 - got {max_depth}")


def _best_split(X, y, features):
    """
    Largest variance-reduction split of one node as `(feature, threshold)`, or `None` when no split reduces the
    squared error. Candidate thresholds are midpoints between consecutive distinct values; gains equal up to
    `SPLIT_GAIN_RTOL` go to the lowest feature index, then the lowest threshold.
    """
    n = y.shape[0]
    total = float(np.sum(y))
    parent = total * total / n
    tol = SPLIT_GAIN_RTOL * max(1.0, abs(parent))
    best_gain, best = tol, None
    for feature in sorted(int(f) for f in features):
        order = np.argsort(X[:, feature], kind="stable")
        xs, ys = X[order, feature], y[order]
        distinct = xs[1:] > xs[:-1]
        if not np.any(distinct):
            continue
        n_left = np.arange(1, n, dtype=np.float64)
        s_left = np.cumsum(ys)[:-1]
        s_right = total - s_left
        gain = s_left * s_left / n_left + s_right * s_right / (n - n_left) - parent
        gain = np.where(distinct, gain, -np.inf)
        top = float(np.max(gain))
        if top <= best_gain + tol:
            continue
        pos = int(np.argmax(gain >= top - tol))
        threshold = 0.5 * (xs[pos] + xs[pos + 1])
        if threshold >= xs[pos + 1]:
            threshold = xs[pos]
        best_gain, best = top, (feature, float(threshold))
    return best


def _grow_tree(X, y, max_depth, min_samples_split, sample_features):
    """Depth-first greedy CART growth; `sample_features()` returns the features searched at each node."""
    feature, threshold, left, right, value = [], [], [], [], []

    def rec(rows, depth):
        node = len(feature)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(np.mean(y[rows])))
        if depth >= max_depth or rows.shape[0] < min_samples_split:
            return node
        split = _best_split(X[rows], y[rows], sample_features())
        if split is None:
            return node
        feature[node], threshold[node] = split
        go_left = X[rows, split[0]] <= split[1]
        left[node] = rec(rows[go_left], depth + 1)
        right[node] = rec(rows[~go_left], depth + 1)
        return node

    rec(np.arange(y.shape[0]), 0)
    return Tree(feature, threshold, left, right, value, X.shape[1])


def _feature_sampler(n_features, fraction, rng):
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"max_features_fraction must lie in (0, 1] - got {fraction}")
    k = max(1, int(fraction * n_features))
    if k == n_features:
        return lambda: range(n_features)
    return lambda: rng.choice(n_features, size=k, replace=False)


def fit_tree(data, max_depth: int = 5, min_samples_split: int = 2, seed: int = 0) -> Tree:
    r"""
    CART regression tree: greedy variance-reduction splits, mean target at the leaves.

    Every node searches all features, so the tree does not depend on `seed`; ties in gain go to the lowest
    feature index, then the lowest threshold.

    Args:
        data (`Dataset`): training rows.
        max_depth (`int`, *optional*, defaults to 5): depth limit, `0` gives a single leaf.
        min_samples_split (`int`, *optional*, defaults to 2): smallest node that may be split.
        seed (`int`, *optional*, defaults to 0): accepted for a uniform fitting signature.
    """
    X, y = _check_data(data)
    _check_depth(max_depth)
    n_features = X.shape[1]
    return _grow_tree(X, y, max_depth, min_samples_split, lambda: range(n_features))


def fit_forest(
    data,
    n_trees: int = 15,
    max_depth: int = 5,
    min_samples_split: int = 3,
    max_features_fraction: float = 0.6,
    seed: int = 0,
    bootstrap: bool = True,
) -> Ensemble:
    """
    Random forest of bootstrap-sampled CART trees; the prediction is the uniform average. Each node searches
    `max(1, int(max_features_fraction * d))` features drawn without replacement.
    """
    X, y = _check_data(data)
    _check_depth(max_depth)
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1 - got {n_trees}")
    rng = np.random.default_rng(seed)
    sample_features = _feature_sampler(X.shape[1], max_features_fraction, rng)
    trees = []
    for _ in range(n_trees):
        rows = rng.integers(0, X.shape[0], size=X.shape[0]) if bootstrap else np.arange(X.shape[0])
        trees.append(_grow_tree(X[rows], y[rows], max_depth, min_samples_split, sample_features))
    return Ensemble(trees, combination="average", kind="forest")


def fit_gbt(
    data,
    n_estimators: int = 15,
    learning_rate: float = 0.2,
    max_depth: int = 5,
    min_samples_split: int = 5,
    max_features_fraction: float = 0.6,
    seed: int = 0,
) -> Ensemble:
    """Least-squares gradient boosting from base score = target mean; prediction = base + lr * sum of stages."""
    X, y = _check_data(data)
    _check_depth(max_depth)
    if n_estimators < 0:
        raise ValueError(f"n_estimators must be >= 0 - got {n_estimators}")
    base_score = float(np.mean(y))
    if n_estimators == 0 or max_depth == 0:
        return Ensemble([Tree.leaf(base_score, X.shape[1])], combination="single", kind="gbt")
    sample_features = _feature_sampler(X.shape[1], max_features_fraction, np.random.default_rng(seed))
    current = np.full(y.shape[0], base_score)
    trees = []
    for _ in range(n_estimators):
        tree = _grow_tree(X, y - current, max_depth, min_samples_split, sample_features)
        current = current + learning_rate * tree.predict(X)
        trees.append(tree)
    return Ensemble(trees, combination="boosted", kind="gbt", learning_rate=learning_rate, base_score=base_score)


def fit_lmdt(
    data,
    max_depth: int = 5,
    min_samples_split: int = 10,
    seed: int = 0,
    ridge: float = 1e-6,
) -> Ensemble:
    """CART structure with a ridge-regularized linear model fitted in every leaf."""
    X, y = _check_data(data)
    structure = fit_tree(data, max_depth=max_depth, min_samples_split=min_samples_split, seed=seed)
    reached = structure.apply(X)
    value = structure.value.copy()
    coef = np.zeros((structure.n_nodes, X.shape[1]))
    for leaf in structure.leaves:
        rows = reached == leaf
        if not np.any(rows):
            raise ValueError(f"leaf {leaf} holds no training rows")
        regressor = Ridge(alpha=ridge).fit(X[rows], y[rows])
        coef[leaf] = regressor.coef_
        value[leaf] = regressor.intercept_
    tree = Tree(
        structure.feature,
        structure.threshold,
        structure.children_left,
        structure.children_right,
        value,
        X.shape[1],
        coef=coef,
    )
    logger.debug(f"fitted lmdt with {len(tree.leaves)} leaves")
    return Ensemble([tree], combination="single", kind="lmdt")
