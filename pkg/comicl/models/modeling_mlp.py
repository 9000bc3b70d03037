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
import copy
from typing import List, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..utils import logging
from .modeling_base import PredictorWrapper


logger = logging.get_logger(__name__)


class Mlp(PredictorWrapper):
    r"""
    Fully connected ReLU network with a linear output layer.

    Args:
        weights (`List[np.ndarray]`):
            One matrix of shape `(n_out, n_in)` per layer.
        biases (`List[np.ndarray]`):
            One vector of length `n_out` per layer.
        task (`str`, *optional*, defaults to `"regression"`):
            Regression networks have a single output; classification networks output K logits.
    """
    model_type = "mlp"

    def __init__(self, weights: List[np.ndarray], biases: List[np.ndarray], task: str = "regression"):
        if len(weights) == 0 or len(weights) != len(biases):
            raise ValueError(f"got {len(weights)} weight matrices and {len(biases)} bias vectors")
        self.weights = []
        self.biases = []
        for layer, (weight, bias) in enumerate(zip(weights, biases)):
            weight = np.array(weight, dtype=np.float64, ndmin=2)
            bias = np.array(bias, dtype=np.float64).reshape(-1)
            if weight.shape[0] != bias.shape[0]:
                raise ValueError(f"layer {layer}: weight has {weight.shape[0]} rows but bias has {bias.shape[0]}")
            if layer > 0 and weight.shape[1] != self.weights[-1].shape[0]:
                raise ValueError(
                    f"layer {layer} expects {weight.shape[1]} inputs but layer {layer - 1} has "
                    f"{self.weights[-1].shape[0]} outputs"
                )
            if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
                raise ValueError(f"layer {layer} has non-finite parameters")
            weight.setflags(write=False)
            bias.setflags(write=False)
            self.weights.append(weight)
            self.biases.append(bias)
        if task not in ("regression", "classification"):
            raise ValueError(f"task must be regression or classification - got {task}")
        if task == "regression" and self.n_outputs != 1:
            raise ValueError(f"a regression network has one output - got {self.n_outputs}")
        self.task = task
        self.training_stats = {}

    @property
    def n_features(self):
        return self.weights[0].shape[1]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[0]

    @property
    def hidden_sizes(self):
        return tuple(w.shape[0] for w in self.weights[:-1])

    @property
    def layers(self):
        return list(zip(self.weights, self.biases))

    def forward(self, X):
        """Raw network outputs of shape `(n, n_outputs)`."""
        a = np.asarray(X, dtype=np.float64)
        for weight, bias in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ weight.T + bias, 0.0)
        return a @ self.weights[-1].T + self.biases[-1]

    def predict(self, X):
        X = np.array(X, dtype=np.float64, ndmin=2)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features - got {X.shape[1]}")
        out = self.forward(X)
        return out[:, 0] if self.task == "regression" else out

    def _to_dict(self):
        return {
            "task": self.task,
            "layers": [
                {"shape": list(w.shape), "weight": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def _from_dict(cls, payload):
        weights, biases = [], []
        for layer in payload["layers"]:
            weights.append(np.array(layer["weight"], dtype=np.float64).reshape(layer["shape"]))
            biases.append(np.array(layer["bias"], dtype=np.float64))
        return cls(weights, biases, task=payload.get("task", "regression"))


def predict_mlp(model: Mlp, x) -> np.ndarray:
    """Exact forward pass on one point: a length-1 vector (regression) or K logits (classification)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.n_features:
        raise ValueError(f"expected {model.n_features} features - got {x.shape[0]}")
    return model.forward(x[None, :])[0]


def _build_network(n_inputs, hidden_sizes, n_outputs):
    layers = []
    width = n_inputs
    for size in hidden_sizes:
        layers += [nn.Linear(width, size), nn.ReLU()]
        width = size
    layers.append(nn.Linear(width, n_outputs))
    return nn.Sequential(*layers).double()


def train_mlp(
    data,
    arch: Sequence[int] = (32, 32),
    epochs: int = 2000,
    lr: float = 0.05,
    l2: float = 0.01,
    seed: int = 0,
) -> Mlp:
    r"""
    Train a ReLU network by full-batch gradient descent with L2 weight decay.

    Regression networks are fitted to standardized targets and the scaling is folded into the output layer.
    Classification networks minimize softmax cross-entropy on their logits. The lowest-loss iterate is kept,
    so the final training loss never exceeds the initial one.

    Args:
        data (`Dataset`):
            Training rows.
        arch (`Sequence[int]`, *optional*, defaults to `(32, 32)`):
            Hidden layer sizes. An empty tuple trains a linear model.
        epochs (`int`, *optional*, defaults to 2000):
            Number of gradient steps. `0` returns the seeded initialization.
        lr (`float`, *optional*, defaults to 0.05):
            Fixed step size.
        l2 (`float`, *optional*, defaults to 0.01):
            Weight decay coefficient.
        seed (`int`, *optional*, defaults to 0):
            Seed of the parameter initialization.
    """
    if data.n_rows < 1:
        raise ValueError("cannot train on an empty dataset")
    if lr <= 0:
        raise ValueError(f"lr must be > 0 - got {lr}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0 - got {epochs}")
    if any(int(size) < 1 for size in arch):
        raise ValueError(f"hidden layer sizes must be positive - got {tuple(arch)}")

    inputs = torch.tensor(np.asarray(data.features), dtype=torch.float64)
    if data.task == "classification":
        n_outputs = data.n_classes
        labels = torch.tensor(np.asarray(data.targets), dtype=torch.long)
        shift, scale = 0.0, 1.0

        def compute_loss(network):
            return F.cross_entropy(network(inputs), labels)

    else:
        n_outputs = 1
        targets = np.asarray(data.targets, dtype=np.float64)
        shift = float(targets.mean())
        scale = float(targets.std())
        if scale < 1e-12:
            scale = 1.0
        standardized = torch.tensor((targets - shift) / scale, dtype=torch.float64)

        def compute_loss(network):
            return F.mse_loss(network(inputs)[:, 0], standardized)

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        network = _build_network(data.n_features, [int(size) for size in arch], n_outputs)

    optimizer = torch.optim.SGD(network.parameters(), lr=lr, weight_decay=l2)
    with torch.no_grad():
        initial_loss = compute_loss(network).item()
    best_loss = initial_loss
    best_state = copy.deepcopy(network.state_dict())

    for epoch in range(epochs):
        optimizer.zero_grad()
        loss = compute_loss(network)
        if not torch.isfinite(loss):
            raise ValueError(f"non-finite training loss at epoch {epoch}")
        if loss.item() < best_loss:
            best_loss = loss.item()
            best_state = copy.deepcopy(network.state_dict())
        loss.backward()
        optimizer.step()

    if epochs > 0:
        with torch.no_grad():
            final_loss = compute_loss(network).item()
        if not np.isfinite(final_loss):
            raise ValueError(f"non-finite training loss at epoch {epochs}")
        if final_loss < best_loss:
            best_loss = final_loss
            best_state = copy.deepcopy(network.state_dict())
    network.load_state_dict(best_state)

    linears = [module for module in network if isinstance(module, nn.Linear)]
    weights = [module.weight.detach().numpy().copy() for module in linears]
    biases = [module.bias.detach().numpy().copy() for module in linears]
    weights[-1] = weights[-1] * scale
    biases[-1] = biases[-1] * scale + shift

    model = Mlp(weights, biases, task=data.task)
    model.training_stats = {"loss/initial": initial_loss, "loss/final": best_loss, "epochs": epochs}
    logger.debug(f"trained mlp {tuple(arch)}: loss {initial_loss:.6g} -> {best_loss:.6g} in {epochs} epochs")
    return model
