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
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..mip.model import LinExpr, MipModel, VarRef, quicksum
from ..models.modeling_mlp import Mlp
from ..utils import logging
from .bounds import ActivationBounds, propagate_bounds


logger = logging.get_logger(__name__)


@dataclass
class EncodedOutput:
    r"""
    Variables created by a predictor encoding.

    Args:
        outputs (`List[VarRef]`): one variable for regression, K logit variables for classification.
        output_bounds (`List[Tuple[float, float]]`): interval of every output variable.
        binaries (`List[VarRef]`): auxiliary binaries created by the encoding.
        continuous (`List[VarRef]`): auxiliary continuous variables (activations, tree outputs).
        constraints (`List[int]`): indices of the constraints added.
    """

    outputs: List[VarRef]
    output_bounds: List[Tuple[float, float]]
    binaries: List[VarRef] = field(default_factory=list)
    continuous: List[VarRef] = field(default_factory=list)
    constraints: List[int] = field(default_factory=list)

    @property
    def output(self) -> VarRef:
        if len(self.outputs) != 1:
            raise ValueError(f"the encoding has {len(self.outputs)} outputs")
        return self.outputs[0]


def input_box(model: MipModel, input_vars: Sequence[VarRef]):
    """Variable bounds of `input_vars` as two arrays."""
    lower = np.array([model.variables[var.index].lb for var in input_vars])
    upper = np.array([model.variables[var.index].ub for var in input_vars])
    return lower, upper


def _widen(lower, upper):
    pad = 1e-9 * max(1.0, abs(lower), abs(upper))
    return float(lower) - pad, float(upper) + pad


def encode_mlp(
    model: MipModel,
    mlp: Mlp,
    input_vars: Sequence[VarRef],
    bounds: Optional[ActivationBounds] = None,
    prefix: str = "nn",
) -> EncodedOutput:
    r"""
    Big-M encoding of a ReLU network. For an unstable hidden neuron with pre-activation `p` in `[L, U]`:

        a >= p,   a <= p - L (1 - d),   a <= U d,   0 <= a <= U,   d binary

    Neurons with `U <= 0` become a variable fixed at 0 and neurons with `L >= 0` the equality `a = p`; neither gets a
    binary. The output layer is linear.

    Args:
        model (`MipModel`): model receiving the encoding.
        mlp (`Mlp`): the network.
        input_vars (`List[VarRef]`): one variable per network input.
        bounds (`ActivationBounds`, *optional*):
            Pre-activation bounds; propagated from the bounds of `input_vars` when omitted.
        prefix (`str`, *optional*, defaults to `"nn"`): name prefix of the created variables.
    """
    if len(input_vars) != mlp.n_features:
        raise ValueError(f"the network has {mlp.n_features} inputs - got {len(input_vars)} variables")
    if bounds is None:
        bounds = propagate_bounds(mlp, *input_box(model, input_vars))
    bounds.check_against(mlp)

    encoded = EncodedOutput(outputs=[], output_bounds=[])
    current: List[LinExpr] = [LinExpr.from_any(var) for var in input_vars]
    n_layers = len(mlp.weights)

    for layer, (weight, bias) in enumerate(mlp.layers):
        lower, upper = bounds.layers[layer]
        following = []
        for j in range(weight.shape[0]):
            terms = (expr * float(coef) for coef, expr in zip(weight[j], current) if coef != 0.0)
            pre = quicksum(terms) + float(bias[j])
            lo, hi = _widen(lower[j], upper[j])
            if layer == n_layers - 1:
                y = model.add_var(f"{prefix}_out{j}", lb=lo, ub=hi)
                encoded.constraints.append(model.add_constraint(y - pre, "==", 0.0, label=f"{prefix}_out{j}"))
                encoded.outputs.append(y)
                encoded.output_bounds.append((lo, hi))
                continue

            name = f"{prefix}_a{layer}_{j}"
            if upper[j] <= 0.0:
                a = model.add_var(name, lb=0.0, ub=0.0)
            elif lower[j] >= 0.0:
                a = model.add_var(name, lb=max(lo, 0.0), ub=hi)
                encoded.constraints.append(model.add_constraint(a - pre, "==", 0.0, label=f"{name}_eq"))
            else:
                a = model.add_var(name, lb=0.0, ub=hi)
                d = model.add_var(f"{prefix}_d{layer}_{j}", kind="binary", lb=0.0, ub=1.0)
                encoded.binaries.append(d)
                encoded.constraints.extend(
                    [
                        model.add_constraint(a - pre, ">=", 0.0, label=f"{name}_ge"),
                        model.add_constraint(a - pre - lo * d, "<=", -lo, label=f"{name}_on"),
                        model.add_constraint(a - hi * d, "<=", 0.0, label=f"{name}_off"),
                    ]
                )
            encoded.continuous.append(a)
            following.append(LinExpr.from_any(a))
        current = following

    logger.debug(
        f"encoded network '{prefix}': {len(encoded.binaries)} binaries, {bounds.n_unstable} unstable neurons, "
        f"{len(encoded.constraints)} constraints"
    )
    return encoded
