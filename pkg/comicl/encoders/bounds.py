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
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..models.modeling_mlp import Mlp


@dataclass
class ActivationBounds:
    r"""
    Pre-activation intervals of every layer of a network over an input box.

    Args:
        layers (`List[Tuple[np.ndarray, np.ndarray]]`):
            `(L, U)` per layer, hidden layers first and the output layer last.
        input_lb (`np.ndarray`): lower corner of the input box.
        input_ub (`np.ndarray`): upper corner of the input box.
    """

    layers: List[Tuple[np.ndarray, np.ndarray]]
    input_lb: np.ndarray
    input_ub: np.ndarray

    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def output(self):
        return self.layers[-1]

    def post_activation(self, layer):
        lower, upper = self.layers[layer]
        return np.maximum(lower, 0.0), np.maximum(upper, 0.0)

    def unstable(self, layer):
        """Mask of hidden neurons whose sign is not fixed over the box."""
        lower, upper = self.layers[layer]
        return (lower < 0.0) & (upper > 0.0)

    @property
    def n_unstable(self):
        return int(sum(self.unstable(layer).sum() for layer in range(self.n_layers - 1)))

    def check_against(self, mlp: Mlp):
        if self.n_layers != len(mlp.weights):
            raise ValueError(f"bounds cover {self.n_layers} layers but the network has {len(mlp.weights)}")
        for layer, ((lower, upper), weight) in enumerate(zip(self.layers, mlp.weights)):
            if lower.shape != (weight.shape[0],) or upper.shape != (weight.shape[0],):
                raise ValueError(f"bounds missing for neurons of layer {layer}: expected {weight.shape[0]} intervals")


def interval_affine(weight, bias, lower, upper):
    """Image of the box `[lower, upper]` under `x -> weight @ x + bias`."""
    positive = np.maximum(weight, 0.0)
    negative = np.minimum(weight, 0.0)
    return (
        positive @ lower + negative @ upper + bias,
        positive @ upper + negative @ lower + bias,
    )


def propagate_bounds(mlp: Mlp, lower, upper) -> ActivationBounds:
    """
    Interval bound propagation: pre-activation bounds of every neuron, layer by layer, from a finite input box.
    Hidden layers pass `[max(0, L), max(0, U)]` on to the next layer.
    """
    lower = np.asarray(lower, dtype=np.float64).reshape(-1)
    upper = np.asarray(upper, dtype=np.float64).reshape(-1)
    if lower.shape != (mlp.n_features,) or upper.shape != (mlp.n_features,):
        raise ValueError(f"input box must have {mlp.n_features} entries - got {lower.shape[0]} and {upper.shape[0]}")
    unbounded = np.where(~(np.isfinite(lower) & np.isfinite(upper)))[0]
    if unbounded.size:
        raise ValueError(f"input feature {int(unbounded[0])} is unbounded; bound propagation needs a finite box")
    if np.any(lower > upper):
        raise ValueError("input box has lower > upper")

    layers = []
    lo, hi = lower, upper
    for index, (weight, bias) in enumerate(mlp.layers):
        pre_lo, pre_hi = interval_affine(weight, bias, lo, hi)
        layers.append((pre_lo, pre_hi))
        if index < len(mlp.weights) - 1:
            lo, hi = np.maximum(pre_lo, 0.0), np.maximum(pre_hi, 0.0)
    return ActivationBounds(layers=layers, input_lb=lower, input_ub=upper)
