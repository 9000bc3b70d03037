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
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..conformal.calibration import Calibration, default_big_m
from ..core import SPLIT_EPS, ceil_rank
from ..data.oracles import OutcomeSet
from ..mip.model import MipModel, VarRef, quicksum
from ..models.modeling_base import PredictorWrapper
from ..models.modeling_mlp import Mlp
from ..models.modeling_tree import Ensemble
from ..models.modeling_uncertainty import UncertaintyModel
from ..utils import logging
from .conformal_sets import (
    DEFAULT_EPS,
    add_classification_argmax,
    add_classification_conformal,
    add_regression_conformal,
    required_big_m,
)
from .neural import EncodedOutput, encode_mlp
from .trees import encode_tree_ensemble


logger = logging.get_logger(__name__)

METHODS = ("micl", "wmicl", "cmicl")


@dataclass(frozen=True)
class KnownConstraint:
    """Known linear constraint `coefficients . x (sense) rhs` over the decision variables."""

    coefficients: Tuple[float, ...]
    sense: str
    rhs: float
    label: str

    def to_dict(self):
        return {"coefficients": list(self.coefficients), "sense": self.sense, "rhs": self.rhs, "label": self.label}


@dataclass
class ProblemSpec:
    r"""
    Optimization problem with a learned constraint: minimize `costs . x` over the box `[lower, upper]`, subject to
    known linear constraints and the requirement that the outcome of `x` lies in `outcome`.

    Args:
        name (`str`): problem name, used as model name.
        costs (`np.ndarray`): objective coefficients.
        lower (`np.ndarray`): lower bounds of the decision variables.
        upper (`np.ndarray`): upper bounds of the decision variables.
        feature_names (`List[str]`): decision variable names, in predictor input order.
        constraints (`List[KnownConstraint]`): known linear constraints.
        outcome (`OutcomeSet`): target set of the learned constraint.
    """

    name: str
    costs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    feature_names: List[str]
    constraints: List[KnownConstraint] = field(default_factory=list)
    outcome: OutcomeSet = field(default_factory=OutcomeSet)

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=np.float64).reshape(-1)
        self.lower = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        n = len(self.feature_names)
        for name in ("costs", "lower", "upper"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have {n} entries - got {getattr(self, name).shape[0]}")
        if np.any(self.lower > self.upper):
            raise ValueError("decision variable box has lower > upper")
        for constraint in self.constraints:
            if len(constraint.coefficients) != n:
                raise ValueError(f"constraint '{constraint.label}' needs {n} coefficients")

    @property
    def n_vars(self):
        return len(self.feature_names)

    @property
    def task(self):
        return "classification" if self.outcome.is_classification else "regression"

    def known_feasible(self, x, tol=1e-6):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        for constraint in self.constraints:
            lhs = float(np.dot(constraint.coefficients, x))
            if constraint.sense == "<=" and lhs > constraint.rhs + tol:
                return False
            if constraint.sense == ">=" and lhs < constraint.rhs - tol:
                return False
            if constraint.sense == "==" and abs(lhs - constraint.rhs) > tol:
                return False
        return True

    def with_costs(self, costs):
        return ProblemSpec(
            name=self.name,
            costs=costs,
            lower=self.lower,
            upper=self.upper,
            feature_names=list(self.feature_names),
            constraints=list(self.constraints),
            outcome=self.outcome,
        )


@dataclass
class Formulation:
    r"""
    A built program together with the handles needed to read a solution.

    Args:
        model (`MipModel`): the program.
        method (`str`): `micl`, `wmicl` or `cmicl`.
        x_vars (`List[VarRef]`): decision variables.
        outputs (`List[EncodedOutput]`): one encoding per embedded predictor.
        u_var (`VarRef`, *optional*): encoded uncertainty (regression C-MICL).
        z_vars (`List[VarRef]`): enforcement binaries (W-MICL).
        big_m (`float`, *optional*): M used by the classification conformal constraint.
    """

    model: MipModel
    method: str
    x_vars: List[VarRef]
    outputs: List[EncodedOutput]
    u_var: Optional[VarRef] = None
    z_vars: List[VarRef] = field(default_factory=list)
    big_m: Optional[float] = None

    def decision(self, assignment) -> np.ndarray:
        assignment = np.asarray(assignment, dtype=np.float64)
        return np.array([assignment[var.index] for var in self.x_vars])

    def predicted(self, assignment) -> np.ndarray:
        """Encoded outputs of the first predictor at `assignment`."""
        assignment = np.asarray(assignment, dtype=np.float64)
        return np.array([assignment[var.index] for var in self.outputs[0].outputs])


def _base_model(problem: ProblemSpec, method: str):
    model = MipModel(f"{problem.name}-{method}")
    x_vars = [
        model.add_var(name, lb=lo, ub=hi)
        for name, lo, hi in zip(problem.feature_names, problem.lower, problem.upper)
    ]
    for constraint in problem.constraints:
        expr = quicksum(x * float(coef) for coef, x in zip(constraint.coefficients, x_vars) if coef != 0.0)
        model.add_constraint(expr, constraint.sense, constraint.rhs, label=constraint.label)
    model.set_objective(quicksum(x * float(cost) for cost, x in zip(problem.costs, x_vars) if cost != 0.0))
    return model, x_vars


def encode_predictor(model: MipModel, predictor: PredictorWrapper, input_vars, prefix: str) -> EncodedOutput:
    """Dispatch to the encoder of the predictor family."""
    if isinstance(predictor, UncertaintyModel):
        return encode_mlp(model, predictor.as_mlp(), input_vars, prefix=prefix)
    if isinstance(predictor, Mlp):
        return encode_mlp(model, predictor, input_vars, prefix=prefix)
    if isinstance(predictor, Ensemble):
        return encode_tree_ensemble(model, predictor, input_vars, prefix=prefix, eps=SPLIT_EPS)
    raise ValueError(f"no encoding for predictor type {type(predictor).__name__}")


def _check_task(problem: ProblemSpec, predictor: PredictorWrapper):
    if predictor.task != problem.task:
        raise ValueError(f"a {predictor.task} predictor cannot model a {problem.task} outcome")
    if predictor.n_features != problem.n_vars:
        raise ValueError(f"predictor expects {predictor.n_features} inputs, the problem has {problem.n_vars}")
    if problem.task == "classification" and predictor.n_outputs != problem.outcome.n_classes:
        raise ValueError(f"predictor has {predictor.n_outputs} logits for {problem.outcome.n_classes} classes")


def build_micl(problem: ProblemSpec, predictor: PredictorWrapper) -> Formulation:
    """Plain constraint learning: the predicted outcome itself must lie in the target set."""
    _check_task(problem, predictor)
    model, x_vars = _base_model(problem, "micl")
    encoded = encode_predictor(model, predictor, x_vars, prefix="h")
    outcome = problem.outcome
    if outcome.is_classification:
        add_classification_argmax(model, encoded.outputs, outcome, encoded.output_bounds, prefix="argmax")
    else:
        y = encoded.output
        if math.isfinite(outcome.upper):
            model.add_constraint(y, "<=", outcome.upper, label="outcome_upper")
        if math.isfinite(outcome.lower):
            model.add_constraint(y, ">=", outcome.lower, label="outcome_lower")
    return Formulation(model=model, method="micl", x_vars=x_vars, outputs=[encoded])


def wmicl_threshold(n_models: int, alpha: float) -> int:
    """Number of ensemble members whose constraint must hold."""
    return ceil_rank((1.0 - alpha) * n_models)


def build_wmicl(problem: ProblemSpec, predictors: Sequence[PredictorWrapper], alpha: float) -> Formulation:
    """
    Constraint learning over an ensemble of P predictors: each member gets an enforcement binary `z_p` that switches
    on its target-set constraint, and at least `ceil((1 - alpha) P)` members are enforced.
    """
    if len(predictors) < 1:
        raise ValueError("build_wmicl needs at least one predictor")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1) - got {alpha}")
    for predictor in predictors:
        _check_task(problem, predictor)
    model, x_vars = _base_model(problem, "wmicl")
    outcome = problem.outcome
    outputs, z_vars = [], []
    for p, predictor in enumerate(predictors):
        encoded = encode_predictor(model, predictor, x_vars, prefix=f"m{p}")
        z = model.add_var(f"z{p}", kind="binary", lb=0.0, ub=1.0)
        if outcome.is_classification:
            add_classification_argmax(
                model, encoded.outputs, outcome, encoded.output_bounds, enforce=z, prefix=f"m{p}_argmax"
            )
        else:
            y = encoded.output
            y_lo, y_hi = encoded.output_bounds[0]
            if math.isfinite(outcome.upper):
                big_up = max(y_hi - outcome.upper, 0.0)
                model.add_constraint(y + big_up * z, "<=", outcome.upper + big_up, label=f"m{p}_upper")
            if math.isfinite(outcome.lower):
                big_lo = max(outcome.lower - y_lo, 0.0)
                model.add_constraint(y - big_lo * z, ">=", outcome.lower - big_lo, label=f"m{p}_lower")
        outputs.append(encoded)
        z_vars.append(z)
    model.add_constraint(quicksum(z_vars), ">=", wmicl_threshold(len(predictors), alpha), label="cardinality")
    return Formulation(model=model, method="wmicl", x_vars=x_vars, outputs=outputs, z_vars=z_vars)


def build_cmicl(
    problem: ProblemSpec,
    predictor: PredictorWrapper,
    calibration: Calibration,
    uncertainty: Optional[UncertaintyModel] = None,
    big_m: Optional[float] = None,
    eps: float = DEFAULT_EPS,
    big_m_safety: float = 4.0,
) -> Formulation:
    r"""
    Conformal constraint learning: the conformal prediction set of `x` must lie inside the target set.

    Args:
        problem (`ProblemSpec`): the optimization problem.
        predictor (`PredictorWrapper`): calibrated predictor (logit network for classification).
        calibration (`Calibration`): conformal calibration of `predictor`.
        uncertainty (`UncertaintyModel`, *optional*): required for regression.
        big_m (`float`, *optional*):
            M of the classification constraint. Defaults to `big_m_safety` times the largest absolute calibration
            logit, raised to the smallest valid value when the logit bounds require it.
        eps (`float`, *optional*, defaults to 1e-6): strictness of set exclusion.
        big_m_safety (`float`, *optional*, defaults to 4.0): safety factor of the default M.
    """
    _check_task(problem, predictor)
    if calibration.task != problem.task:
        raise ValueError(f"calibration scores '{calibration.score_kind}' do not match a {problem.task} problem")
    model, x_vars = _base_model(problem, "cmicl")
    outcome = problem.outcome
    q_hat = calibration.encoder_quantile()

    if problem.task == "regression":
        if uncertainty is None:
            raise ValueError("regression C-MICL needs an uncertainty model")
        if uncertainty.n_features != problem.n_vars:
            raise ValueError(
                f"uncertainty model expects {uncertainty.n_features} inputs, the problem has {problem.n_vars}"
            )
        encoded = encode_predictor(model, predictor, x_vars, prefix="h")
        u_encoded = encode_predictor(model, uncertainty, x_vars, prefix="u")
        add_regression_conformal(
            model, encoded.output, u_encoded.output, q_hat, outcome, u_floor=uncertainty.u_floor
        )
        return Formulation(
            model=model, method="cmicl", x_vars=x_vars, outputs=[encoded, u_encoded], u_var=u_encoded.output
        )

    encoded = encode_predictor(model, predictor, x_vars, prefix="h")
    q_desired = calibration.desired_quantile()
    required = required_big_m(encoded.output_bounds, q_hat, outcome, eps, q_desired) if math.isfinite(q_hat) else 0.0
    if big_m is None:
        if calibration.max_abs_logit is not None:
            default = default_big_m(calibration.max_abs_logit, big_m_safety)
        else:
            default = required
        big_m = max(default, required, 1.0)
        if big_m > default and calibration.max_abs_logit is not None:
            message = f"big-M raised from the calibration default {default:.6g} to {big_m:.6g} to cover logit bounds"
            warnings.warn(message, UserWarning)
            logger.warning(message)
    add_classification_conformal(
        model,
        encoded.outputs,
        q_hat,
        outcome,
        big_m,
        eps=eps,
        q_hat_desired=q_desired,
        logit_bounds=encoded.output_bounds,
    )
    return Formulation(model=model, method="cmicl", x_vars=x_vars, outputs=[encoded], big_m=big_m)
