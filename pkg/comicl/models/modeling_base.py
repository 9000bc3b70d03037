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
import json
import os

import numpy as np


MODEL_FORMAT = "comicl-model/1"
MODEL_FILE_NAME = "model.json"


class PredictorWrapper(object):
    r"""
    Base class of every MIP-encodable predictor. A predictor has an exact piecewise-linear forward pass and
    serializes to a versioned JSON document.

    Attributes
    ----------
    model_type: (`str`)
        Tag written to the `model_type` field of the serialized document.
    task: (`str`)
        `"regression"` or `"classification"`.
    """
    model_type = None
    task = "regression"
    _registry = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.model_type is not None:
            PredictorWrapper._registry[cls.model_type] = cls

    @property
    def n_features(self):
        raise NotImplementedError("Not implemented")

    def predict(self, X):
        raise NotImplementedError("Not implemented")

    def predict_one(self, x):
        """Forward pass on a single feature vector."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.n_features:
            raise ValueError(f"expected {self.n_features} features - got {x.shape[0]}")
        return self.predict(x[None, :])[0]

    def _to_dict(self):
        raise NotImplementedError("Not implemented")

    @classmethod
    def _from_dict(cls, payload):
        raise NotImplementedError("Not implemented")

    def to_dict(self):
        payload = {"format": MODEL_FORMAT, "model_type": self.model_type}
        payload.update(self._to_dict())
        return payload

    @classmethod
    def from_dict(cls, payload):
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {payload.get('format')!r}, expected {MODEL_FORMAT!r}")
        model_type = payload.get("model_type")
        if model_type not in PredictorWrapper._registry:
            raise ValueError(f"unknown model_type {model_type!r}")
        target_cls = PredictorWrapper._registry[model_type]
        if cls is not PredictorWrapper and not issubclass(target_cls, cls):
            raise ValueError(f"document holds a {model_type} model, not a {cls.__name__}")
        return target_cls._from_dict(payload)

    def save_pretrained(self, save_directory):
        r"""
        Save the model to `save_directory/model.json`.
        """
        os.makedirs(save_directory, exist_ok=True)
        path = os.path.join(save_directory, MODEL_FILE_NAME)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=1)
            f.write("\n")
        return path

    @classmethod
    def from_pretrained(cls, pretrained_model_path):
        r"""
        Instantiates a model from a directory written by `save_pretrained` or from the JSON file itself.

        Parameters
        ----------
        pretrained_model_path: (`str`)
            Directory holding `model.json`, or the path of a model document.
        """
        path = pretrained_model_path
        if os.path.isdir(path):
            path = os.path.join(path, MODEL_FILE_NAME)
        if not os.path.isfile(path):
            raise FileNotFoundError(f"model file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        return cls.from_dict(payload)


def bootstrap_indices(n_rows, fraction, seed):
    """Indices of a bootstrap sample (with replacement) of size `round(fraction * n_rows)`, at least one row."""
    if n_rows < 1:
        raise ValueError(f"cannot bootstrap {n_rows} rows")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"bootstrap fraction must lie in (0, 1] - got {fraction}")
    size = max(1, int(np.floor(fraction * n_rows + 0.5)))
    return np.random.default_rng(seed).integers(0, n_rows, size=size)
