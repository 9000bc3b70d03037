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
import os
from typing import Optional

import datasets
import numpy as np

from ..conformal.calibration import CoverageReport, classification_scores, coverage_eval, regression_scores
from ..core import format_float
from ..data.oracles import synth_classification, synth_regression
from ..utils import logging
from .base import BaseRunner
from .pipeline import Artifacts, Pipeline, feasibility_groups


logger = logging.get_logger(__name__)

COVERAGE_FILE = "coverage.csv"
COVERAGE_COLUMNS = ("stratum_kind", "stratum", "n", "coverage")
GROUP_NAMES = {0: "infeasible", 1: "feasible"}


def decile_labels(values):
    """Decile label `d01`..`d10` of every value within its own sample."""
    values = np.asarray(values, dtype=np.float64)
    edges = np.quantile(values, np.linspace(0.1, 0.9, 9))
    return [f"d{int(k) + 1:02d}" for k in np.searchsorted(edges, values, side="right")]


def coverage_rows(report: CoverageReport, stratum_kind: str):
    """`(stratum_kind, stratum, n, coverage)` rows: overall, feasibility groups, then the extra strata."""
    rows = [("overall", "all", report.n_test, report.overall)]
    for group, (coverage, n) in sorted(report.groups.items()):
        rows.append(("feasibility", GROUP_NAMES.get(group, str(group)), n, coverage))
    for stratum, (coverage, n) in report.strata.items():
        rows.append((stratum_kind, stratum, n, coverage))
    return rows


def write_coverage_csv(rows, path):
    columns = {
        "stratum_kind": [row[0] for row in rows],
        "stratum": [row[1] for row in rows],
        "n": [str(row[2]) for row in rows],
        "coverage": [format_float(row[3]) for row in rows],
    }
    features = datasets.Features({name: datasets.Value("string") for name in COVERAGE_COLUMNS})
    datasets.Dataset.from_dict(columns, features=features).to_csv(path, index=False)
    return path


class CoverageRunner(BaseRunner):
    """Empirical coverage of the calibrated predictor on fresh oracle samples."""

    def run(self, artifacts: Optional[Artifacts] = None) -> CoverageReport:
        pipeline = Pipeline(self.config, self.output_dir)
        if artifacts is None:
            artifacts = pipeline.load_artifacts()
        if artifacts.calibration is None:
            raise ValueError("coverage needs a calibration; enable cmicl in problem.methods")
        data_config = self.config.data
        n_test = self.config.experiment.n_test
        seed = self.seed_for("coverage")
        if pipeline.task == "regression":
            test, _ = synth_regression(n_test, seed, data_config.noise_sigma)
            scores = regression_scores(
                artifacts.predictor.predict(test.features),
                artifacts.uncertainty.predict(test.features),
                test.targets,
                u_floor=artifacts.uncertainty.u_floor,
            )
            strata, stratum_kind = decile_labels(test.targets), "decile"
        else:
            test, _ = synth_classification(n_test, seed, data_config.class_thresholds)
            scores = classification_scores(artifacts.predictor.predict(test.features), test.targets)
            strata, stratum_kind = [f"class{int(k)}" for k in test.targets], "class"

        groups = feasibility_groups(test.targets, pipeline.outcome)
        calibration = artifacts.calibration
        report = coverage_eval(calibration, scores, test_groups=groups, strata=strata)

        os.makedirs(self.output_dir, exist_ok=True)
        write_coverage_csv(coverage_rows(report, stratum_kind), self.path(COVERAGE_FILE))
        self.log_stats({"coverage": {"overall": report.overall, "n_test": report.n_test}})
        return report


def coverage_experiment(config, output_dir=None, artifacts=None) -> CoverageReport:
    """Stratified empirical coverage; writes `coverage.csv` to the output directory."""
    return CoverageRunner(config, output_dir).run(artifacts=artifacts)
