# flake8: noqa

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
from .base import BaseRunner
from .benchmarks import BENCHMARKS, BasketBenchmark, ReactorBenchmark, get_benchmark, nutrient_matrix, to_physical
from .config import (
    ConformalConfig,
    DataConfig,
    ExperimentConfig,
    HarnessConfig,
    ModelConfig,
    ProblemConfig,
    SolverConfig,
)
from .coverage import COVERAGE_FILE, CoverageRunner, coverage_experiment, decile_labels
from .experiment import (
    REPORT_COLUMNS,
    REPORT_FILE,
    SUMMARY_FILE,
    ExperimentReport,
    ExperimentRunner,
    InstanceRecord,
    run_experiment,
    solve_instance,
)
from .pipeline import Artifacts, Pipeline, feasibility_groups, fit_predictor, outcome_for, train_ensemble_members
from .utils import compute_ci, delta_percent, sample_cost_vector
