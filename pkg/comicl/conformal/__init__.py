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
from .calibration import (
    FEASIBLE_GROUP,
    INFEASIBLE_GROUP,
    SCORE_KINDS,
    Calibration,
    CoverageReport,
    calibrate_classification,
    calibrate_regression,
    classification_scores,
    conformal_quantile,
    coverage_eval,
    default_big_m,
    marginal_calibrate,
    mondrian_calibrate,
    regression_scores,
    score_classification,
    score_regression,
)
