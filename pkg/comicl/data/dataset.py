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
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import datasets
import numpy as np

from ..core import format_float, round_half_up
from ..utils import logging


logger = logging.get_logger(__name__)

TASKS = ("regression", "classification")
DEFAULT_TARGET = {"regression": "y", "classification": "label"}


def _freeze(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    r"""
    Tabular dataset with declared feature bounds.

    Args:
        features (`np.ndarray`):
            Matrix of shape `(n_rows, n_features)`.
        targets (`np.ndarray`):
            Real targets (regression) or class indices (classification), length `n_rows`.
        feature_names (`Tuple[str]`):
            One name per feature column.
        feature_bounds (`np.ndarray`):
            Array of shape `(n_features, 2)` holding the closed interval `[lo, hi]` of every feature.
        task (`str`, *optional*, defaults to `"regression"`):
            Either `"regression"` or `"classification"`.
        n_classes (`int`, *optional*):
            Number of classes K. Inferred as `max(targets) + 1` for classification when not given.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: Tuple[str, ...]
    feature_bounds: np.ndarray
    task: str = "regression"
    n_classes: Optional[int] = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS} - got {self.task}")
        features = np.array(self.features, dtype=np.float64, ndmin=2)
        bounds = np.array(self.feature_bounds, dtype=np.float64).reshape(-1, 2)
        if self.task == "classification":
            targets = np.asarray(self.targets)
            if targets.size and not np.all(np.equal(np.mod(targets, 1), 0)):
                raise ValueError("classification targets must be integer class indices")
            targets = targets.astype(np.int64)
        else:
            targets = np.asarray(self.targets, dtype=np.float64)
        targets = targets.reshape(-1)

        if features.shape[0] != targets.shape[0]:
            raise ValueError(
                f"features have {features.shape[0]} rows but targets have length {targets.shape[0]}"
            )
        if len(self.feature_names) != features.shape[1]:
            raise ValueError(
                f"got {len(self.feature_names)} feature names for {features.shape[1]} feature columns"
            )
        if bounds.shape[0] != features.shape[1]:
            raise ValueError(f"got {bounds.shape[0]} feature bounds for {features.shape[1]} feature columns")
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValueError("every feature bound must satisfy lo <= hi")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        outside = (features < bounds[:, 0]) | (features > bounds[:, 1])
        if np.any(outside):
            row, col = np.argwhere(outside)[0]
            raise ValueError(
                f"feature value {features[row, col]} at row {row}, col {col} lies outside its bounds "
                f"[{bounds[col, 0]}, {bounds[col, 1]}]"
            )

        n_classes = self.n_classes
        if self.task == "classification":
            if n_classes is None:
                n_classes = int(targets.max()) + 1 if targets.size else 0
            if targets.size and (targets.min() < 0 or targets.max() >= n_classes):
                raise ValueError(f"class indices must lie in 0..{n_classes - 1}")
        else:
            n_classes = None

        object.__setattr__(self, "features", _freeze(features))
        object.__setattr__(self, "targets", _freeze(targets))
        object.__setattr__(self, "feature_bounds", _freeze(bounds))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "n_classes", n_classes)

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def target_name(self):
        return DEFAULT_TARGET[self.task]

    def subset(self, indices):
        """Row view restricted to `indices`, keeping names, bounds and K."""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[indices],
            targets=self.targets[indices],
            feature_names=self.feature_names,
            feature_bounds=self.feature_bounds,
            task=self.task,
            n_classes=self.n_classes,
        )

    def with_targets(self, targets):
        """Same features with new real-valued targets, used for residual datasets."""
        return Dataset(
            features=self.features,
            targets=np.asarray(targets, dtype=np.float64),
            feature_names=self.feature_names,
            feature_bounds=self.feature_bounds,
            task="regression",
        )


@dataclass(frozen=True, eq=False)
class DataSplit:
    train_indices: np.ndarray
    cal_indices: np.ndarray

    def __post_init__(self):
        train = np.sort(np.asarray(self.train_indices, dtype=np.int64))
        cal = np.sort(np.asarray(self.cal_indices, dtype=np.int64))
        if train.size == 0 or cal.size == 0:
            raise ValueError(f"both index sets must be non-empty - got {train.size} train / {cal.size} cal")
        if np.intersect1d(train, cal).size:
            raise ValueError("train and calibration indices must be disjoint")
        object.__setattr__(self, "train_indices", _freeze(train))
        object.__setattr__(self, "cal_indices", _freeze(cal))


def split(dataset: Dataset, train_fraction: float, seed: int) -> DataSplit:
    """
    Shuffle the rows with a seeded permutation and put the first `round(train_fraction * n)` in the training set.
    """
    n = dataset.n_rows
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1) - got {train_fraction}")
    if n < 2:
        raise ValueError(f"cannot split a dataset with {n} rows")
    n_train = round_half_up(train_fraction * n)
    if n_train < 1 or n_train > n - 1:
        raise ValueError(f"train_fraction={train_fraction} on {n} rows leaves an empty train or calibration set")
    permutation = np.random.default_rng(seed).permutation(n)
    return DataSplit(train_indices=permutation[:n_train], cal_indices=permutation[n_train:])


def _read_header(path):
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        has_rows = any(line.strip() for line in f)
    if not header:
        raise ValueError(f"{path} is empty")
    return [name.strip() for name in header.split(",")], has_rows


def _read_string_columns(path, column_names):
    features = datasets.Features({name: datasets.Value("string") for name in column_names})
    with tempfile.TemporaryDirectory() as cache_dir:
        table = datasets.Dataset.from_csv(
            path, features=features, keep_in_memory=True, cache_dir=cache_dir, keep_default_na=False
        )
        return {name: table[name] for name in column_names}


def read_csv_columns(path):
    """Every column of a CSV file as a list of strings, in header order."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"file not found: {path}")
    column_names, _ = _read_header(path)
    return _read_string_columns(path, column_names)


def _parse_cell(cell, row, col):
    try:
        value = float(cell)
    except (TypeError, ValueError):
        value = math.nan
    if not math.isfinite(value):
        raise ValueError(f"non-numeric cell at row {row}, col {col}")
    return value


def load_csv(
    path: str,
    target: Optional[str] = None,
    task: str = "regression",
    feature_bounds: Optional[Sequence[Sequence[float]]] = None,
    n_classes: Optional[int] = None,
) -> Dataset:
    r"""
    Load a dataset from a UTF-8 CSV file with a header row.

    Args:
        path (`str`):
            Path to the CSV file.
        target (`str`, *optional*):
            Name of the target column. Defaults to `y` for regression and `label` for classification.
        task (`str`, *optional*, defaults to `"regression"`):
            Task kind of the target column.
        feature_bounds (`Sequence`, *optional*):
            Declared `[lo, hi]` per feature. Inferred as the per-column `[min, max]` when omitted.
        n_classes (`int`, *optional*):
            Number of classes K of a classification target.

    Rows and columns in error messages are 1-based data rows and 1-based columns.
    """
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS} - got {task}")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    target = target or DEFAULT_TARGET[task]
    column_names, has_rows = _read_header(path)
    if target not in column_names:
        raise ValueError(f"target column '{target}' missing from {path} (columns: {', '.join(column_names)})")
    if not has_rows:
        raise ValueError(f"{path} has a header but no data rows")

    columns = _read_string_columns(path, column_names)
    n_rows = len(columns[target])
    parsed = {}
    for col, name in enumerate(column_names, start=1):
        parsed[name] = [_parse_cell(cell, row, col) for row, cell in enumerate(columns[name], start=1)]

    feature_names = [name for name in column_names if name != target]
    features = np.array([parsed[name] for name in feature_names], dtype=np.float64).T.reshape(n_rows, -1)
    targets = np.array(parsed[target], dtype=np.float64)

    if feature_bounds is None:
        bounds = np.stack([features.min(axis=0), features.max(axis=0)], axis=1)
    else:
        bounds = np.asarray(feature_bounds, dtype=np.float64)

    logger.debug(f"loaded {n_rows} rows with {len(feature_names)} features from {path}")
    return Dataset(
        features=features,
        targets=targets,
        feature_names=tuple(feature_names),
        feature_bounds=bounds,
        task=task,
        n_classes=n_classes,
    )


def save_csv(dataset: Dataset, path: str) -> str:
    """Write the dataset as CSV: feature columns in order, then the target column. Floats use round-trip text."""
    columns = {}
    for j, name in enumerate(dataset.feature_names):
        columns[name] = [format_float(v) for v in dataset.features[:, j]]
    if dataset.task == "classification":
        columns[dataset.target_name] = [str(int(v)) for v in dataset.targets]
    else:
        columns[dataset.target_name] = [format_float(v) for v in dataset.targets]
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    datasets.Dataset.from_dict(columns).to_csv(path, index=False)
    return path
