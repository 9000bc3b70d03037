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
from typing import Sequence

import numpy as np

from ..core import U_FLOOR
from .modeling_base import PredictorWrapper
from .modeling_mlp import Mlp, train_mlp


class UncertaintyModel(PredictorWrapper):
    r"""
    Secondary regressor of absolute residuals, clamped below at `u_floor`.

    Args:
        network (`Mlp`):
            Single-output regression network.
        u_floor (`float`, *optional*, defaults to 1e-3):
            Smallest value the model can predict.
    """
    model_type = "uncertainty"

    def __init__(self, network: Mlp, u_floor: float = U_FLOOR):
        if network.task != "regression":
            raise ValueError("the uncertainty network must be a regression network")
        if not u_floor > 0:
            raise ValueError(f"u_floor must be > 0 - got {u_floor}")
        self.network = network
        self.u_floor = float(u_floor)

    @property
    def n_features(self):
        return self.network.n_features

    def predict(self, X):
        return np.maximum(self.network.predict(X), self.u_floor)

    def as_mlp(self) -> Mlp:
        """
        The clamped model as a plain ReLU network: the raw output becomes a hidden unit `relu(raw - u_floor)`
        followed by the output `u_floor + unit`, which equals `max(raw, u_floor)` everywhere.
        """
        weights = list(self.network.weights)
        biases = list(self.network.biases)
        biases[-1] = biases[-1] - self.u_floor
        weights.append(np.ones((1, 1)))
        biases.append(np.array([self.u_floor]))
        return Mlp(weights, biases, task="regression")

    def _to_dict(self):
        return {"u_floor": self.u_floor, "network": self.network._to_dict()}

    @classmethod
    def _from_dict(cls, payload):
        return cls(Mlp._from_dict(payload["network"]), u_floor=payload.get("u_floor", U_FLOOR))


def residual_targets(base: PredictorWrapper, data) -> np.ndarray:
    """Absolute residuals `|h(x_i) - y_i|` of a trained regression predictor."""
    return np.abs(base.predict(data.features) - np.asarray(data.targets, dtype=np.float64))


def fit_uncertainty(
    base: PredictorWrapper,
    data,
    arch: Sequence[int] = (32, 32),
    epochs: int = 2000,
    lr: float = 0.05,
    l2: float = 0.001,
    seed: int = 0,
    u_floor: float = U_FLOOR,
) -> UncertaintyModel:
    r"""
    Train the uncertainty network on the absolute residuals of `base` over `data`.

    Args:
        base (`PredictorWrapper`):
            Regression predictor already trained on the same rows.
        data (`Dataset`):
            Training rows of `base`.
        arch, epochs, lr, l2, seed:
            Passed to `train_mlp`.
        u_floor (`float`, *optional*, defaults to 1e-3):
            Clamp applied to every prediction.
    """
    if data.n_rows < 1:
        raise ValueError("cannot train on an empty dataset")
    if data.task != "regression":
        raise ValueError("the uncertainty model is only defined for regression predictors")
    if base.n_features != data.n_features:
        raise ValueError(f"base predictor expects {base.n_features} features, data has {data.n_features}")
    residuals = residual_targets(base, data)
    network = train_mlp(data.with_targets(residuals), arch=arch, epochs=epochs, lr=lr, l2=l2, seed=seed)
    return UncertaintyModel(network, u_floor=u_floor)
