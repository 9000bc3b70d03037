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
from typing import List, Optional, Sequence, Tuple

from ..core import U_FLOOR, CalibrationInfeasibleError
from ..data.oracles import OutcomeSet
from ..mip.model import MipModel, VarRef, quicksum


DEFAULT_EPS = 1e-6


def _check_quantile(q_hat, name="q_hat", signed=False):
    # classification scores are negative logits, so their quantile may be negative
    q_hat = float(q_hat)
    if math.isnan(q_hat) or q_hat == -math.inf:
        raise ValueError(f"{name} must be a finite number or +inf - got {q_hat}")
    if not signed and q_hat < 0:
        raise ValueError(f"{name} must be >= 0 - got {q_hat}")
    return q_hat


def add_regression_conformal(
    model: MipModel,
    y_var: VarRef,
    u_var: VarRef,
    q_hat: float,
    outcome: OutcomeSet,
    u_floor: float = U_FLOOR,
    prefix: str = "conformal",
) -> List[int]:
    """
    Require the normalized conformal interval `[y - q_hat u, y + q_hat u]` to lie inside the target interval. An
    infinite end of the target interval adds no constraint.
    """
    q_hat = _check_quantile(q_hat)
    if math.isinf(q_hat):
        raise CalibrationInfeasibleError("the regression quantile is +inf, no conformal interval fits the target set")
    if outcome.is_classification:
        raise ValueError("regression conformal constraints need an interval outcome set")
    u_lb = model.variables[u_var.index].lb
    if u_lb < u_floor - 1e-6:
        raise ValueError(f"the uncertainty variable needs a lower bound >= {u_floor} - got {u_lb}")

    added = []
    if math.isfinite(outcome.upper):
        added.append(model.add_constraint(y_var + q_hat * u_var, "<=", outcome.upper, label=f"{prefix}_upper"))
    if math.isfinite(outcome.lower):
        added.append(model.add_constraint(y_var - q_hat * u_var, ">=", outcome.lower, label=f"{prefix}_lower"))
    return added


def _class_quantiles(outcome, q_hat, q_hat_desired):
    q_desired = q_hat if q_hat_desired is None else q_hat_desired
    return [q_desired if k in outcome.desired else q_hat for k in range(outcome.n_classes)]


def required_big_m(
    logit_bounds: Sequence[Tuple[float, float]],
    q_hat: float,
    outcome: OutcomeSet,
    eps: float = DEFAULT_EPS,
    q_hat_desired: Optional[float] = None,
) -> float:
    """Smallest M for which the classification conformal rows are valid over the given logit intervals."""
    required = 0.0
    for (lower, upper), q in zip(logit_bounds, _class_quantiles(outcome, q_hat, q_hat_desired)):
        if math.isinf(q):
            continue
        required = max(required, -lower - q, upper + q + eps)
    return required


def add_classification_conformal(
    model: MipModel,
    logit_vars: Sequence[VarRef],
    q_hat: float,
    outcome: OutcomeSet,
    big_m: float,
    eps: float = DEFAULT_EPS,
    q_hat_desired: Optional[float] = None,
    logit_bounds: Optional[Sequence[Tuple[float, float]]] = None,
    prefix: str = "conformal",
) -> List[int]:
    r"""
    Require the conformal prediction set to avoid every undesired class and to contain at least one desired class.

    With one binary `w_k` per class (1 when class k enters the set):

        -h_k - q_k <= M (1 - w_k)
        h_k + q_k + eps <= M w_k
        sum of w_k over desired classes >= 1
        w_k = 0 for undesired classes

    Args:
        model (`MipModel`): model receiving the constraints.
        logit_vars (`List[VarRef]`): the K logit variables.
        q_hat (`float`): quantile of the negative true-class logit.
        outcome (`OutcomeSet`): classification outcome set.
        big_m (`float`): the constant M.
        eps (`float`, *optional*, defaults to 1e-6): strictness of set exclusion.
        q_hat_desired (`float`, *optional*):
            Quantile applied to desired classes (Mondrian calibration); `q_hat` when omitted. An infinite value keeps
            every desired class in the set.
        logit_bounds (`List[Tuple[float, float]]`, *optional*):
            Logit intervals used to reject an M that is too small.
        prefix (`str`, *optional*, defaults to `"conformal"`): name prefix.
    """
    q_hat = _check_quantile(q_hat, signed=True)
    if math.isinf(q_hat):
        raise CalibrationInfeasibleError("the classification quantile is +inf, undesired classes cannot be excluded")
    if q_hat_desired is not None:
        q_hat_desired = _check_quantile(q_hat_desired, "q_hat_desired", signed=True)
    if not outcome.is_classification:
        raise ValueError("classification conformal constraints need a class outcome set")
    if len(logit_vars) != outcome.n_classes:
        raise ValueError(f"expected {outcome.n_classes} logit variables - got {len(logit_vars)}")
    if not big_m > 0:
        raise ValueError(f"big_m must be > 0 - got {big_m}")
    if not eps > 0:
        raise ValueError(f"eps must be > 0 - got {eps}")
    if logit_bounds is not None:
        required = required_big_m(logit_bounds, q_hat, outcome, eps, q_hat_desired)
        if big_m < required:
            raise ValueError(f"big_m {big_m} does not cover the logit bounds, at least {required} is needed")

    added = []
    in_set = []
    for k, (logit, q) in enumerate(zip(logit_vars, _class_quantiles(outcome, q_hat, q_hat_desired))):
        w = model.add_var(f"{prefix}_w{k}", kind="binary", lb=0.0, ub=1.0)
        in_set.append(w)
        if math.isfinite(q):
            added.append(model.add_constraint(-1.0 * logit + big_m * w, "<=", big_m + q, label=f"{prefix}_in{k}"))
            added.append(model.add_constraint(logit - big_m * w, "<=", -q - eps, label=f"{prefix}_out{k}"))
    added.append(
        model.add_constraint(quicksum(in_set[k] for k in outcome.desired), ">=", 1.0, label=f"{prefix}_desired")
    )
    for k in outcome.undesired:
        added.append(model.add_constraint(in_set[k], "==", 0.0, label=f"{prefix}_exclude{k}"))
    return added


def argmax_big_m(logit_bounds, k, other):
    """M of `y_other - y_k <= M (1 - w_k)`."""
    return max(logit_bounds[other][1] - logit_bounds[k][0], 0.0)


def add_classification_argmax(
    model: MipModel,
    logit_vars: Sequence[VarRef],
    outcome: OutcomeSet,
    logit_bounds: Sequence[Tuple[float, float]],
    enforce: Optional[VarRef] = None,
    prefix: str = "argmax",
) -> List[int]:
    """
    Require a desired class to have the largest logit: binaries `w_k` over desired classes with
    `y_j - y_k <= M (1 - w_k)` for every undesired j and `sum(w) >= 1`, or `sum(w) >= z` when an enforcement
    binary `z` is given.
    """
    if not outcome.is_classification:
        raise ValueError("argmax constraints need a class outcome set")
    if len(logit_vars) != outcome.n_classes or len(logit_bounds) != outcome.n_classes:
        raise ValueError(f"expected {outcome.n_classes} logit variables and bounds")
    added = []
    chosen = []
    for k in outcome.desired:
        w = model.add_var(f"{prefix}_w{k}", kind="binary", lb=0.0, ub=1.0)
        chosen.append(w)
        for other in outcome.undesired:
            big_m = argmax_big_m(logit_bounds, k, other)
            added.append(
                model.add_constraint(
                    logit_vars[other] - logit_vars[k] + big_m * w, "<=", big_m, label=f"{prefix}_{k}_over_{other}"
                )
            )
    if enforce is None:
        added.append(model.add_constraint(quicksum(chosen), ">=", 1.0, label=f"{prefix}_any"))
    else:
        added.append(model.add_constraint(quicksum(chosen) - enforce, ">=", 0.0, label=f"{prefix}_any"))
    return added
