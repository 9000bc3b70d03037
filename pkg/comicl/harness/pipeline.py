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
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..conformal.calibration import Calibration, calibrate_classification, calibrate_regression
from ..data.dataset import Dataset, DataSplit, load_csv, save_csv, split
from ..data.oracles import Oracle, OutcomeSet, synth_classification, synth_regression
from ..encoders.formulations import Formulation, ProblemSpec, build_cmicl, build_micl, build_wmicl
from ..models.modeling_base import PredictorWrapper, bootstrap_indices
from ..models.modeling_mlp import train_mlp
from ..models.modeling_tree import Ensemble, fit_forest, fit_gbt, fit_lmdt, fit_tree
from ..models.modeling_uncertainty import UncertaintyModel, fit_uncertainty
from ..solver.branch_and_bound import SolveResult, branch_and_bound
from ..utils import logging
from .base import BaseRunner
from .benchmarks import get_benchmark
from .utils import sample_cost_vector


logger = logging.get_logger(__name__)

DATA_FILE = "data.csv"
ORACLE_FILE = "oracle.json"
CALIBRATION_FILE = "calibration.json"
MODELS_DIR = "models"
PREDICTOR_DIR = "predictor"
UNCERTAINTY_DIR = "uncertainty"


def member_dir(p):
    return f"wmicl_{p}"


@dataclass
class Artifacts:
    r"""
    Everything a solve needs: data, oracle, split, trained models and calibration.

    Args:
        dataset (`Dataset`): the full dataset.
        oracle (`Oracle`): noiseless ground truth of the dataset.
        split (`DataSplit`): train / calibration partition.
        predictor (`PredictorWrapper`, *optional*): model of MICL and C-MICL.
        uncertainty (`UncertaintyModel`, *optional*): uncertainty model of regression C-MICL.
        members (`List[PredictorWrapper]`): bootstrap ensemble of W-MICL.
        calibration (`Calibration`, *optional*): conformal calibration of `predictor`.
    """

    dataset: Dataset
    oracle: Oracle
    split: DataSplit
    predictor: Optional[PredictorWrapper] = None
    uncertainty: Optional[UncertaintyModel] = None
    members: List[PredictorWrapper] = field(default_factory=list)
    calibration: Optional[Calibration] = None

    @property
    def train_data(self):
        return self.dataset.subset(self.split.train_indices)

    @property
    def cal_data(self):
        return self.dataset.subset(self.split.cal_indices)


def fit_predictor(model_config, data: Dataset, seed: int) -> PredictorWrapper:
    """Train a predictor of the configured family."""
    family = model_config.family
    min_split = model_config.resolved_min_samples_split
    if family == "mlp":
        return train_mlp(
            data,
            arch=tuple(model_config.hidden_sizes),
            epochs=model_config.epochs,
            lr=model_config.learning_rate,
            l2=model_config.l2,
            seed=seed,
        )
    if data.task != "regression":
        raise ValueError(f"the {family} family only supports regression")
    if family == "tree":
        tree = fit_tree(data, max_depth=model_config.max_depth, min_samples_split=min_split, seed=seed)
        return Ensemble.from_tree(tree, kind="cart")
    if family == "forest":
        return fit_forest(
            data,
            n_trees=model_config.n_trees,
            max_depth=model_config.max_depth,
            min_samples_split=min_split,
            max_features_fraction=model_config.max_features,
            seed=seed,
        )
    if family == "gbt":
        return fit_gbt(
            data,
            n_estimators=model_config.n_trees,
            learning_rate=model_config.gbt_learning_rate,
            max_depth=model_config.max_depth,
            min_samples_split=min_split,
            max_features_fraction=model_config.max_features,
            seed=seed,
        )
    if family == "lmdt":
        return fit_lmdt(data, max_depth=model_config.max_depth, min_samples_split=min_split, seed=seed)
    raise ValueError(f"unknown model family '{family}'")


def train_ensemble_members(
    data: Dataset,
    n_models: int,
    fraction: float,
    fit_fn: Callable[[Dataset, int], PredictorWrapper],
    bootstrap_seed: Callable[[int], int],
    model_seed: Callable[[int], int],
) -> List[PredictorWrapper]:
    """Train `n_models` predictors, each on its own bootstrap sample of `data`."""
    if n_models < 1:
        raise ValueError(f"n_models must be >= 1 - got {n_models}")
    members = []
    for p in range(n_models):
        rows = bootstrap_indices(data.n_rows, fraction, bootstrap_seed(p))
        members.append(fit_fn(data.subset(rows), model_seed(p)))
        logger.debug(f"trained ensemble member {p + 1}/{n_models} on {rows.shape[0]} bootstrap rows")
    return members


def outcome_for(config) -> OutcomeSet:
    """Benchmark target set with the overrides of the `problem` section."""
    benchmark = get_benchmark(config.data.task)
    outcome = benchmark.outcome
    problem = config.problem
    if config.data.task == "regression":
        lower = outcome.lower if problem.outcome_lower is None else problem.outcome_lower
        upper = outcome.upper if problem.outcome_upper is None else problem.outcome_upper
        return OutcomeSet.interval(lower, upper)
    n_classes = len(config.data.class_thresholds) + 1
    desired = outcome.desired if problem.desired_classes is None else problem.desired_classes
    return OutcomeSet.classes(desired, n_classes)


def feasibility_groups(targets, outcome: OutcomeSet) -> np.ndarray:
    """Group id `1(y in Y)` per target: 0 for infeasible and 1 for feasible outcomes."""
    return np.array([int(outcome.contains(y)) for y in np.asarray(targets).reshape(-1)], dtype=np.int64)


class Pipeline(BaseRunner):
    """
    Pipeline stages of a run: data generation, training, calibration and single-instance solving. Every stage
    writes its artifacts below the output directory and the next stage reads them back.
    """

    def __init__(self, config, output_dir=None):
        super().__init__(config, output_dir)
        self.benchmark = get_benchmark(config.data.task)
        self.outcome = outcome_for(config)

    @property
    def task(self):
        return self.config.data.task

    @property
    def methods(self):
        return self.config.problem.methods

    # data

    def generate_data(self):
        data_config = self.config.data
        seed = self.seed_for("data")
        if self.task == "regression":
            dataset, oracle = synth_regression(data_config.resolved_n_samples, seed, data_config.noise_sigma)
        else:
            dataset, oracle = synth_classification(data_config.resolved_n_samples, seed, data_config.class_thresholds)
        os.makedirs(self.output_dir, exist_ok=True)
        save_csv(dataset, self.path(DATA_FILE))
        with open(self.path(ORACLE_FILE), "w", encoding="utf-8") as f:
            json.dump(oracle.to_dict(), f, indent=2)
        logger.info(f"wrote {dataset.n_rows} rows to {self.path(DATA_FILE)}")
        return dataset, oracle

    def load_data(self):
        oracle_path = self.path(ORACLE_FILE)
        if not os.path.isfile(oracle_path):
            raise FileNotFoundError(f"oracle descriptor not found: {oracle_path}")
        with open(oracle_path, "r", encoding="utf-8") as f:
            oracle = Oracle.from_dict(json.load(f))
        dataset = load_csv(
            self.path(DATA_FILE), task=self.task, feature_bounds=oracle.feature_bounds, n_classes=oracle.n_classes
        )
        return dataset, oracle

    def data_split(self, dataset):
        return split(dataset, self.config.data.resolved_train_fraction, self.seed_for("split"))

    # training

    def train(self, dataset=None, oracle=None):
        """Train the models the configured methods need and save them."""
        if dataset is None:
            dataset, oracle = self.load_data()
        data_split = self.data_split(dataset)
        artifacts = Artifacts(dataset=dataset, oracle=oracle, split=data_split)
        train_data = artifacts.train_data
        model_config = self.config.model

        if "micl" in self.methods or "cmicl" in self.methods:
            artifacts.predictor = fit_predictor(model_config, train_data, self.seed_for("model"))
            artifacts.predictor.save_pretrained(self.ensure_dir(MODELS_DIR, PREDICTOR_DIR))
        if "cmicl" in self.methods and self.task == "regression":
            artifacts.uncertainty = fit_uncertainty(
                artifacts.predictor,
                train_data,
                arch=tuple(model_config.uncertainty_hidden_sizes),
                epochs=model_config.uncertainty_epochs,
                lr=model_config.uncertainty_learning_rate,
                l2=model_config.uncertainty_l2,
                seed=self.seed_for("uncertainty"),
                u_floor=model_config.u_floor,
            )
            artifacts.uncertainty.save_pretrained(self.ensure_dir(MODELS_DIR, UNCERTAINTY_DIR))
        if "wmicl" in self.methods:
            artifacts.members = train_ensemble_members(
                train_data,
                self.config.problem.n_models,
                self.config.problem.bootstrap_fraction,
                lambda data, seed: fit_predictor(model_config, data, seed),
                bootstrap_seed=lambda p: self.seed_for(f"bootstrap/{p}"),
                model_seed=lambda p: self.seed_for(f"wmicl/{p}"),
            )
            for p, member in enumerate(artifacts.members):
                member.save_pretrained(self.ensure_dir(MODELS_DIR, member_dir(p)))
        return artifacts

    def model_paths(self):
        paths = []
        if "micl" in self.methods or "cmicl" in self.methods:
            paths.append(self.path(MODELS_DIR, PREDICTOR_DIR))
        if "cmicl" in self.methods and self.task == "regression":
            paths.append(self.path(MODELS_DIR, UNCERTAINTY_DIR))
        if "wmicl" in self.methods:
            paths.extend(self.path(MODELS_DIR, member_dir(p)) for p in range(self.config.problem.n_models))
        return paths

    # calibration

    def calibrate(self, artifacts=None):
        """Calibrate the predictor on the held-out rows and save the calibration record."""
        if artifacts is None:
            artifacts = self.load_artifacts(with_calibration=False)
        if artifacts.predictor is None:
            raise ValueError("calibration needs a trained predictor; enable micl or cmicl in problem.methods")
        cal_data = artifacts.cal_data
        alpha = self.config.conformal.alpha
        groups = feasibility_groups(cal_data.targets, self.outcome) if self.config.conformal.mondrian else None
        if self.task == "regression":
            if artifacts.uncertainty is None:
                raise ValueError("regression calibration needs the uncertainty model; enable cmicl in problem.methods")
            calibration = calibrate_regression(
                artifacts.predictor,
                artifacts.uncertainty,
                cal_data.features,
                cal_data.targets,
                alpha,
                groups=groups,
                u_floor=artifacts.uncertainty.u_floor,
            )
        else:
            calibration = calibrate_classification(
                artifacts.predictor, cal_data.features, cal_data.targets, alpha, groups=groups
            )
        with open(self.path(CALIBRATION_FILE), "w", encoding="utf-8") as f:
            json.dump(calibration.to_dict(), f, indent=2)
        artifacts.calibration = calibration
        logger.info(f"calibrated on {calibration.n_cal} rows: q_hat={calibration.q_hat}")
        return calibration

    def load_artifacts(self, with_calibration=True):
        dataset, oracle = self.load_data()
        artifacts = Artifacts(dataset=dataset, oracle=oracle, split=self.data_split(dataset))
        if "micl" in self.methods or "cmicl" in self.methods:
            artifacts.predictor = PredictorWrapper.from_pretrained(self.path(MODELS_DIR, PREDICTOR_DIR))
        if "cmicl" in self.methods and self.task == "regression":
            artifacts.uncertainty = PredictorWrapper.from_pretrained(self.path(MODELS_DIR, UNCERTAINTY_DIR))
        if "wmicl" in self.methods:
            artifacts.members = [
                PredictorWrapper.from_pretrained(self.path(MODELS_DIR, member_dir(p)))
                for p in range(self.config.problem.n_models)
            ]
        if with_calibration and "cmicl" in self.methods:
            calibration_path = self.path(CALIBRATION_FILE)
            if not os.path.isfile(calibration_path):
                raise FileNotFoundError(f"calibration record not found: {calibration_path}")
            with open(calibration_path, "r", encoding="utf-8") as f:
                artifacts.calibration = Calibration.from_dict(json.load(f))
        return artifacts

    # optimization

    def problem(self, instance_id: int) -> ProblemSpec:
        problem_config = self.config.problem
        costs = sample_cost_vector(
            self.task, self.seed_for(f"costs/{instance_id}"), problem_config.cost_low, problem_config.cost_high
        )
        return self.benchmark.problem(costs, outcome=self.outcome)

    def build(self, method: str, problem: ProblemSpec, artifacts: Artifacts) -> Formulation:
        if method == "micl":
            return build_micl(problem, artifacts.predictor)
        if method == "wmicl":
            return build_wmicl(problem, artifacts.members, self.config.conformal.alpha)
        if method == "cmicl":
            conformal = self.config.conformal
            return build_cmicl(
                problem,
                artifacts.predictor,
                artifacts.calibration,
                uncertainty=artifacts.uncertainty,
                big_m=conformal.big_m,
                eps=conformal.eps,
                big_m_safety=conformal.big_m_safety,
            )
        raise ValueError(f"unknown method '{method}'")

    def solve(self, formulation: Formulation) -> SolveResult:
        solver = self.config.solver
        return branch_and_bound(
            formulation.model, rel_gap=solver.rel_gap, node_limit=solver.node_limit, time_limit=solver.time_limit
        )

    def run(self):
        """Generate data, train and calibrate in one go."""
        dataset, oracle = self.generate_data()
        artifacts = self.train(dataset, oracle)
        if "cmicl" in self.methods:
            self.calibrate(artifacts)
        return artifacts
