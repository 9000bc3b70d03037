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

import numpy as np
from scipy import stats

from ..data.oracles import BASKET_FEATURES, REACTOR_FEATURES


N_DECISION_VARS = {"regression": len(REACTOR_FEATURES), "classification": len(BASKET_FEATURES)}


def compute_ci(data, n=None, proportion=False):
    """
    Mean and 95% half-width of a Student-t interval.

    With `proportion=True`, `data` is either a proportion `p` (then `n` is required) or a sample of 0/1 outcomes, and
    the standard error is `sqrt(p (1 - p) / n)`. Otherwise the standard error is `s / sqrt(n)` with the sample
    standard deviation `s`.
    """
    if np.ndim(data) == 0:
        if not proportion:
            raise ValueError("a scalar input is only meaningful with proportion=True")
        if n is None:
            raise ValueError("n is required when passing a proportion")
        mean = float(data)
    else:
        values = np.asarray(data, dtype=np.float64)
        if n is not None and n != values.size:
            raise ValueError(f"n={n} does not match a sample of size {values.size}")
        n = values.size
        mean = float(values.mean()) if n else math.nan
    if n < 2:
        raise ValueError(f"a confidence interval needs n >= 2 - got {n}")
    if proportion:
        if not 0.0 <= mean <= 1.0:
            raise ValueError(f"proportion must lie in [0, 1] - got {mean}")
        sem = math.sqrt(mean * (1.0 - mean) / n)
    else:
        sem = float(np.std(values, ddof=1)) / math.sqrt(n)
    return mean, float(stats.t.ppf(0.975, n - 1)) * sem


def sample_cost_vector(task, seed, low=0.5, high=2.0):
    """Cost coefficients drawn uniformly from `[low, high]`, one per decision variable of the task's benchmark."""
    if task not in N_DECISION_VARS:
        raise ValueError(f"unknown task '{task}'")
    if not 0.0 < low <= high:
        raise ValueError(f"cost range needs 0 < low <= high - got [{low}, {high}]")
    return np.random.default_rng(seed).uniform(low, high, size=N_DECISION_VARS[task])


def delta_percent(objective, reference):
    """Relative distance `(objective - reference) / |reference|` in percent."""
    if reference == 0:
        raise ValueError("the reference objective must be non-zero")
    return (objective - reference) / abs(reference) * 100.0
