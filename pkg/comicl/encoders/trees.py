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
from typing import Dict, Sequence, Tuple

import numpy as np

from ..core import SPLIT_EPS
from ..mip.model import LinExpr, MipModel, VarRef, quicksum
from ..models.modeling_tree import Ensemble, Tree
from ..utils import logging
from .neural import EncodedOutput, input_box


logger = logging.get_logger(__name__)


def _split_variables(model, ensemble, input_vars, lower, upper, encoded, prefix, eps):
    """
    One binary per (feature, threshold) pair used anywhere in the ensemble, equal to 1 when `x <= threshold`.
    Thresholds of a feature are sorted so the binaries are monotone.
    """
    thresholds: Dict[int, set] = {}
    for tree in ensemble.trees:
        for _, feature, threshold in tree.splits():
            thresholds.setdefault(feature, set()).add(threshold)

    split_vars: Dict[Tuple[int, float], VarRef] = {}
    for feature in sorted(thresholds):
        lb, ub = float(lower[feature]), float(upper[feature])
        if not (np.isfinite(lb) and np.isfinite(ub)):
            raise ValueError(f"input {feature} needs finite bounds to link tree splits")
        x = input_vars[feature]
        previous = None
        for j, value in enumerate(sorted(thresholds[feature])):
            w = model.add_var(f"{prefix}_w{feature}_{j}", kind="binary", lb=0.0, ub=1.0)
            encoded.binaries.append(w)
            split_vars[(feature, value)] = w
            # x <= v + (ub - v)(1 - w) and x >= v + eps - (v + eps - lb) w
            encoded.constraints.append(
                model.add_constraint(x + (ub - value) * w, "<=", ub, label=f"{prefix}_le{feature}_{j}")
            )
            encoded.constraints.append(
                model.add_constraint(
                    x + (value + eps - lb) * w, ">=", value + eps, label=f"{prefix}_gt{feature}_{j}"
                )
            )
            if previous is not None:
                encoded.constraints.append(
                    model.add_constraint(previous - w, "<=", 0.0, label=f"{prefix}_mono{feature}_{j}")
                )
            previous = w
    return split_vars


def _encode_tree(
    model, tree: Tree, t, input_vars, lower, upper, split_vars, encoded, prefix
) -> Tuple[LinExpr, float, float]:
    """Add leaf selection for one tree; returns its output expression and interval."""
    if tree.is_leaf(0) and not tree.is_linear:
        value = float(tree.value[0])
        return LinExpr(constant=value), value, value

    leaves = tree.leaves
    r = {}
    for leaf in leaves:
        r[leaf] = model.add_var(f"{prefix}_r{t}_{leaf}", kind="binary", lb=0.0, ub=1.0)
        encoded.binaries.append(r[leaf])
    encoded.constraints.append(
        model.add_constraint(quicksum(r.values()), "==", 1.0, label=f"{prefix}_one{t}")
    )
    for node, feature, threshold in tree.splits():
        w = split_vars[(feature, threshold)]
        left = quicksum(r[leaf] for leaf in tree.leaves_under(tree.children_left[node]))
        right = quicksum(r[leaf] for leaf in tree.leaves_under(tree.children_right[node]))
        encoded.constraints.append(model.add_constraint(left - w, "<=", 0.0, label=f"{prefix}_l{t}_{node}"))
        encoded.constraints.append(model.add_constraint(right + w, "<=", 1.0, label=f"{prefix}_r{t}_{node}"))

    if not tree.is_linear:
        values = [float(tree.value[leaf]) for leaf in leaves]
        return quicksum(r[leaf] * value for leaf, value in zip(leaves, values)), min(values), max(values)

    ranges = {leaf: tree.leaf_range(leaf, lower, upper) for leaf in leaves}
    o_min = min(lo for lo, _ in ranges.values())
    o_max = max(hi for _, hi in ranges.values())
    out = model.add_var(f"{prefix}_o{t}", lb=o_min, ub=o_max)
    encoded.continuous.append(out)
    for leaf in leaves:
        lo, hi = ranges[leaf]
        payload = quicksum(
            input_vars[i] * float(coef) for i, coef in enumerate(tree.coef[leaf]) if coef != 0.0
        ) + float(tree.value[leaf])
        big_up, big_down = o_max - lo, hi - o_min
        # |out - payload| is free unless the leaf is selected
        encoded.constraints.append(
            model.add_constraint(out - payload + big_up * r[leaf], "<=", big_up, label=f"{prefix}_up{t}_{leaf}")
        )
        encoded.constraints.append(
            model.add_constraint(
                payload - out + big_down * r[leaf], "<=", big_down, label=f"{prefix}_down{t}_{leaf}"
            )
        )
    return LinExpr.from_any(out), o_min, o_max


def encode_tree_ensemble(
    model: MipModel,
    ensemble: Ensemble,
    input_vars: Sequence[VarRef],
    prefix: str = "tree",
    eps: float = SPLIT_EPS,
) -> EncodedOutput:
    r"""
    Encode a tree ensemble with one active leaf per tree.

    Split binaries are shared between trees that use the same (feature, threshold) pair. A leaf can only be selected
    when every split on its path agrees with the input; the output is the combination-weighted sum of the selected
    leaf values, or of the selected leaf's linear model for linear-model trees.

    Args:
        model (`MipModel`): model receiving the encoding.
        ensemble (`Ensemble`): the ensemble.
        input_vars (`List[VarRef]`): one variable per input, with finite bounds.
        prefix (`str`, *optional*, defaults to `"tree"`): name prefix of the created variables.
        eps (`float`, *optional*, defaults to 1e-6): strictness of the right branch, `x >= threshold + eps`.
    """
    if not ensemble.trees:
        raise ValueError("cannot encode an empty ensemble")
    if len(input_vars) != ensemble.n_features:
        raise ValueError(f"the ensemble has {ensemble.n_features} inputs - got {len(input_vars)} variables")
    if not eps > 0:
        raise ValueError(f"eps must be > 0 - got {eps}")
    lower, upper = input_box(model, input_vars)

    encoded = EncodedOutput(outputs=[], output_bounds=[])
    split_vars = _split_variables(model, ensemble, input_vars, lower, upper, encoded, prefix, eps)

    total = LinExpr(constant=ensemble.offset)
    y_lo = y_hi = ensemble.offset
    for t, (tree, weight) in enumerate(zip(ensemble.trees, ensemble.tree_weights)):
        expr, lo, hi = _encode_tree(model, tree, t, input_vars, lower, upper, split_vars, encoded, prefix)
        total = total + expr * weight
        y_lo += weight * lo
        y_hi += weight * hi

    pad = 0.0 if y_lo == y_hi else 1e-9 * max(1.0, abs(y_lo), abs(y_hi))
    y = model.add_var(f"{prefix}_out", lb=y_lo - pad, ub=y_hi + pad)
    encoded.constraints.append(model.add_constraint(y - total, "==", 0.0, label=f"{prefix}_out"))
    encoded.outputs.append(y)
    encoded.output_bounds.append((y_lo - pad, y_hi + pad))
    logger.debug(
        f"encoded ensemble '{prefix}': {len(ensemble.trees)} trees, {len(split_vars)} split binaries, "
        f"{len(encoded.binaries)} binaries in total"
    )
    return encoded
