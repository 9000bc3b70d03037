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
"""
Noiseless synthetic ground-truth functions and the data generators built on them.

`reactor5-v1` (regression) is defined on the unit box with inputs ordered (v0, v_he, temperature, d_t, length):

    h(x) = 60 x1 x2 + 25 sin(2 pi x3) + 15 x4 - 10 x5^2 + 10

`basket25-v1` (classification) maps 25 commodity amounts (units of 100 g, salt and sugar last) to a palatability
score. With u_m = x_m / ub_m, w_m = 1.2 cos(0.9 m) + 0.3 and v_m = sin(m + 1):

    t(u) = sum_m w_m (u_m - 1/2) + 1/2 sum_{m<24} v_m (u_m - 1/2)(u_{m+1} - 1/2)
    score = 1 / (1 + exp(-t))

and the class is the number of thresholds (0.25, 0.5, 0.75) that are <= score.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ..utils import logging
from .dataset import Dataset


logger = logging.get_logger(__name__)

ORACLE_KINDS = ("regression", "classification")
DEFAULT_THRESHOLDS = (0.25, 0.5, 0.75)
CLASS_NAMES = ("bad", "neutral", "good", "very good")

REACTOR_FEATURES = ("v0", "v_he", "temperature", "d_t", "length")
REACTOR_BOUNDS = np.array([[0.0, 1.0]] * 5)

N_COMMODITIES = 25
SALT_INDEX = 23
SUGAR_INDEX = 24
BASKET_FEATURES = tuple(f"commodity_{m:02d}" for m in range(SALT_INDEX)) + ("salt", "sugar")
BASKET_BOUNDS = np.array([[0.0, 1.0]] * SALT_INDEX + [[0.0, 0.1], [0.0, 0.4]])

_BASKET_M = np.arange(N_COMMODITIES, dtype=np.float64)
BASKET_WEIGHTS = 1.2 * np.cos(0.9 * _BASKET_M) + 0.3
BASKET_INTERACTIONS = np.sin(_BASKET_M[:-1] + 1.0)

for _array in (REACTOR_BOUNDS, BASKET_BOUNDS, BASKET_WEIGHTS, BASKET_INTERACTIONS):
    _array.setflags(write=False)


def reactor_output(x):
    x = np.asarray(x, dtype=np.float64)
    x1, x2, x3, x4, x5 = (x[..., i] for i in range(5))
    return 60.0 * x1 * x2 + 25.0 * np.sin(2.0 * math.pi * x3) + 15.0 * x4 - 10.0 * x5**2 + 10.0


def basket_score(x):
    x = np.asarray(x, dtype=np.float64)
    u = x / BASKET_BOUNDS[:, 1] - 0.5
    t = u @ BASKET_WEIGHTS + 0.5 * np.sum(BASKET_INTERACTIONS * u[..., :-1] * u[..., 1:], axis=-1)
    return 1.0 / (1.0 + np.exp(-t))


def classify_score(score, thresholds=DEFAULT_THRESHOLDS):
    """Class index of a score; a score equal to a threshold goes to the higher class."""
    return np.searchsorted(np.asarray(thresholds, dtype=np.float64), score, side="right")


DEFINITIONS = {
    "reactor5-v1": {"kind": "regression", "names": REACTOR_FEATURES, "bounds": REACTOR_BOUNDS},
    "basket25-v1": {"kind": "classification", "names": BASKET_FEATURES, "bounds": BASKET_BOUNDS},
}


@dataclass(frozen=True)
class OutcomeSet:
    r"""
    Target set of the learned constraint.

    Args:
        lower (`float`, *optional*, defaults to `-inf`):
            Lower end of the regression interval.
        upper (`float`, *optional*, defaults to `inf`):
            Upper end of the regression interval.
        desired (`Tuple[int]`, *optional*):
            Desired class indices (classification).
        n_classes (`int`, *optional*):
            Number of classes K (classification).
    """

    lower: float = -math.inf
    upper: float = math.inf
    desired: Optional[Tuple[int, ...]] = None
    n_classes: Optional[int] = None

    def __post_init__(self):
        if self.desired is None:
            if not self.lower < self.upper:
                raise ValueError(f"outcome interval needs lower < upper - got [{self.lower}, {self.upper}]")
            return
        desired = tuple(sorted(set(int(k) for k in self.desired)))
        if not desired:
            raise ValueError("the desired class set must be non-empty")
        if self.n_classes is None or desired[0] < 0 or desired[-1] >= self.n_classes:
            raise ValueError(f"desired classes {desired} must lie in 0..{self.n_classes} - 1")
        object.__setattr__(self, "desired", desired)

    @classmethod
    def interval(cls, lower, upper):
        return cls(lower=float(lower), upper=float(upper))

    @classmethod
    def classes(cls, desired, n_classes):
        return cls(desired=tuple(desired), n_classes=int(n_classes))

    @property
    def is_classification(self):
        return self.desired is not None

    @property
    def undesired(self):
        if not self.is_classification:
            return ()
        return tuple(k for k in range(self.n_classes) if k not in self.desired)

    def contains(self, value):
        if self.is_classification:
            return int(value) in self.desired
        return bool(self.lower <= value <= self.upper)

    def to_dict(self):
        if self.is_classification:
            return {"desired": list(self.desired), "n_classes": self.n_classes}
        return {"lower": self.lower, "upper": self.upper}

    @classmethod
    def from_dict(cls, payload):
        if "desired" in payload:
            return cls.classes(payload["desired"], payload["n_classes"])
        return cls.interval(payload["lower"], payload["upper"])


@dataclass(frozen=True)
class Oracle:
    r"""
    Noiseless ground truth `h(x)`.

    Args:
        kind (`str`):
            `"regression"` or `"classification"`.
        definition_id (`str`):
            Identifier of a documented function, one of `DEFINITIONS`.
        noise_sigma (`float`, *optional*, defaults to 0.0):
            Standard deviation of the observation noise used at data generation only.
        class_thresholds (`Tuple[float]`, *optional*, defaults to `(0.25, 0.5, 0.75)`):
            Ascending cut points of the classification score.
    """

    kind: str
    definition_id: str
    noise_sigma: float = 0.0
    class_thresholds: Tuple[float, ...] = field(default=DEFAULT_THRESHOLDS)

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise ValueError(f"oracle kind must be one of {ORACLE_KINDS} - got {self.kind}")
        if self.definition_id not in DEFINITIONS:
            raise ValueError(f"unknown oracle definition '{self.definition_id}'")
        if DEFINITIONS[self.definition_id]["kind"] != self.kind:
            raise ValueError(f"oracle definition '{self.definition_id}' is not a {self.kind} oracle")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0 - got {self.noise_sigma}")
        thresholds = tuple(float(t) for t in self.class_thresholds)
        if any(not 0.0 < t < 1.0 for t in thresholds) or any(a >= b for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError(f"class_thresholds must be strictly ascending in (0, 1) - got {thresholds}")
        object.__setattr__(self, "class_thresholds", thresholds)

    @property
    def feature_names(self):
        return DEFINITIONS[self.definition_id]["names"]

    @property
    def feature_bounds(self):
        return DEFINITIONS[self.definition_id]["bounds"]

    @property
    def n_classes(self):
        return len(self.class_thresholds) + 1 if self.kind == "classification" else None

    def score(self, x):
        """Continuous classification score in (0, 1)."""
        if self.kind != "classification":
            raise ValueError("score is only defined for classification oracles")
        return basket_score(x)

    def evaluate(self, x):
        """h(x): real output for regression, class index for classification. Works on single points and batches."""
        if self.kind == "regression":
            return reactor_output(x)
        return classify_score(self.score(x), self.class_thresholds)

    def in_bounds(self, x, tol=1e-9):
        x = np.asarray(x, dtype=np.float64)
        bounds = self.feature_bounds
        return bool(np.all(x >= bounds[:, 0] - tol) and np.all(x <= bounds[:, 1] + tol))

    def to_dict(self):
        return {
            "kind": self.kind,
            "definition_id": self.definition_id,
            "noise_sigma": self.noise_sigma,
            "class_thresholds": list(self.class_thresholds),
        }

    @classmethod
    def from_dict(cls, payload):
        return cls(
            kind=payload["kind"],
            definition_id=payload["definition_id"],
            noise_sigma=float(payload.get("noise_sigma", 0.0)),
            class_thresholds=tuple(payload.get("class_thresholds", DEFAULT_THRESHOLDS)),
        )


def _sample_box(rng, bounds, n):
    lo, hi = bounds[:, 0], bounds[:, 1]
    return lo + (hi - lo) * rng.uniform(size=(n, bounds.shape[0]))


def synth_regression(n: int, seed: int, noise_sigma: float = 0.5):
    """
    Sample `n` points uniformly in the unit box and observe `h(x) + N(0, noise_sigma^2)`.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1 - got {n}")
    oracle = Oracle(kind="regression", definition_id="reactor5-v1", noise_sigma=noise_sigma)
    rng = np.random.default_rng(seed)
    features = _sample_box(rng, oracle.feature_bounds, n)
    targets = oracle.evaluate(features) + noise_sigma * rng.standard_normal(n)
    dataset = Dataset(
        features=features,
        targets=targets,
        feature_names=oracle.feature_names,
        feature_bounds=oracle.feature_bounds,
        task="regression",
    )
    return dataset, oracle


def synth_classification(n: int, seed: int, class_thresholds: Sequence[float] = DEFAULT_THRESHOLDS):
    """
    Sample `n` baskets uniformly in the commodity box and label them with the discretized palatability score.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1 - got {n}")
    oracle = Oracle(kind="classification", definition_id="basket25-v1", class_thresholds=tuple(class_thresholds))
    rng = np.random.default_rng(seed)
    features = _sample_box(rng, oracle.feature_bounds, n)
    labels = oracle.evaluate(features)
    dataset = Dataset(
        features=features,
        targets=labels,
        feature_names=oracle.feature_names,
        feature_bounds=oracle.feature_bounds,
        task="classification",
        n_classes=oracle.n_classes,
    )
    return dataset, oracle


def oracle_feasible(oracle: Oracle, x, target_set: OutcomeSet) -> bool:
    """Ground-truth feasibility `h(x) in Y`, always evaluated without noise."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != len(oracle.feature_names):
        raise ValueError(f"expected {len(oracle.feature_names)} features - got {x.shape[0]}")
    if not oracle.in_bounds(x):
        raise ValueError(f"point {x.tolist()} lies outside the oracle's feature bounds")
    return target_set.contains(oracle.evaluate(x))
