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
"""
Benchmark problems with a learned constraint.

The reactor problem chooses five unit-box variables that map affinely onto physical operating conditions of a plug
flow reactor. Its known design constraints are ratios of physical quantities; all denominators are positive, so
each ratio bound is multiplied through and becomes a linear row in the unit variables.

The basket problem chooses 25 commodity amounts (units of 100 g) that meet twelve nutrient requirements with salt and
sugar fixed, and asks for a palatability class of 2 or 3.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..data.oracles import (
    BASKET_BOUNDS,
    BASKET_FEATURES,
    REACTOR_BOUNDS,
    REACTOR_FEATURES,
    SALT_INDEX,
    SUGAR_INDEX,
    OutcomeSet,
)
from ..encoders.formulations import KnownConstraint, ProblemSpec


# physical range of (v0, v_he, temperature, d_t, length)
REACTOR_PHYSICAL = np.array(
    [[450.0, 1500.0], [450.0, 1500.0], [997.18, 1348.12], [0.5, 2.0], [10.0, 100.0]]
)
REACTOR_OUTCOME = OutcomeSet.interval(50.0, 100.0)

N_NUTRIENTS = 12
BASKET_SALT = 0.05
BASKET_SUGAR = 0.2
BASKET_REQUIREMENT_SHARE = 0.35
BASKET_OUTCOME = OutcomeSet.classes((2, 3), 4)


def nutrient_matrix():
    """Nutrient content per 100 g, `10 (1 + sin(0.7 j + 1.3 m))` for nutrient j and commodity m."""
    j = np.arange(N_NUTRIENTS, dtype=np.float64)[:, None]
    m = np.arange(len(BASKET_FEATURES), dtype=np.float64)[None, :]
    return 10.0 * (1.0 + np.sin(0.7 * j + 1.3 * m))


def nutrient_requirements():
    return BASKET_REQUIREMENT_SHARE * nutrient_matrix() @ BASKET_BOUNDS[:, 1]


def to_physical(x):
    """Map reactor unit variables to physical units."""
    lo, hi = REACTOR_PHYSICAL[:, 0], REACTOR_PHYSICAL[:, 1]
    return lo + (hi - lo) * np.asarray(x, dtype=np.float64)


def ratio_row(numerator: int, denominator: int, ratio: float, sense: str, label: str) -> KnownConstraint:
    """`phys[numerator] (sense) ratio * phys[denominator]` written over the unit variables."""
    lo, span = REACTOR_PHYSICAL[:, 0], REACTOR_PHYSICAL[:, 1] - REACTOR_PHYSICAL[:, 0]
    coefficients = np.zeros(len(REACTOR_FEATURES))
    coefficients[numerator] += span[numerator]
    coefficients[denominator] -= ratio * span[denominator]
    rhs = ratio * lo[denominator] - lo[numerator]
    return KnownConstraint(tuple(float(c) for c in coefficients), sense, float(rhs), label)


def _check_costs(costs, n):
    costs = np.asarray(costs, dtype=np.float64).reshape(-1)
    if costs.shape != (n,):
        raise ValueError(f"expected {n} cost coefficients - got {costs.shape[0]}")
    return costs


@dataclass(frozen=True)
class ReactorBenchmark:
    """Regression benchmark on the `reactor5-v1` oracle."""

    name: str = "reactor"
    task: str = "regression"

    @property
    def outcome(self):
        return REACTOR_OUTCOME

    def known_constraints(self) -> List[KnownConstraint]:
        v0, v_he, temperature, d_t, length = range(5)
        return [
            ratio_row(length, d_t, 10.0, ">=", "length_over_diameter_min"),
            ratio_row(length, d_t, 150.0, "<=", "length_over_diameter_max"),
            ratio_row(v0, v_he, 0.75, ">=", "flow_ratio_min"),
            ratio_row(v0, v_he, 3.0, "<=", "flow_ratio_max"),
            ratio_row(v0, length, 20.0, ">=", "residence_min"),
            ratio_row(v0, length, 120.0, "<=", "residence_max"),
            ratio_row(v0, temperature, 1.1, "<=", "flow_over_temperature"),
        ]

    def problem(self, costs: Sequence[float], outcome: Optional[OutcomeSet] = None) -> ProblemSpec:
        return ProblemSpec(
            name=self.name,
            costs=_check_costs(costs, len(REACTOR_FEATURES)),
            lower=REACTOR_BOUNDS[:, 0],
            upper=REACTOR_BOUNDS[:, 1],
            feature_names=list(REACTOR_FEATURES),
            constraints=self.known_constraints(),
            outcome=outcome or self.outcome,
        )


@dataclass(frozen=True)
class BasketBenchmark:
    """Classification benchmark on the `basket25-v1` oracle."""

    name: str = "basket"
    task: str = "classification"

    @property
    def outcome(self):
        return BASKET_OUTCOME

    def known_constraints(self) -> List[KnownConstraint]:
        rows = []
        for j, (content, requirement) in enumerate(zip(nutrient_matrix(), nutrient_requirements())):
            coefficients = tuple(float(c) for c in content)
            rows.append(KnownConstraint(coefficients, ">=", float(requirement), f"nutrient_{j:02d}"))
        n = len(BASKET_FEATURES)
        for index, amount, label in ((SALT_INDEX, BASKET_SALT, "salt"), (SUGAR_INDEX, BASKET_SUGAR, "sugar")):
            coefficients = np.zeros(n)
            coefficients[index] = 1.0
            rows.append(KnownConstraint(tuple(coefficients.tolist()), "==", amount, f"{label}_amount"))
        return rows

    def problem(self, costs: Sequence[float], outcome: Optional[OutcomeSet] = None) -> ProblemSpec:
        return ProblemSpec(
            name=self.name,
            costs=_check_costs(costs, len(BASKET_FEATURES)),
            lower=BASKET_BOUNDS[:, 0],
            upper=BASKET_BOUNDS[:, 1],
            feature_names=list(BASKET_FEATURES),
            constraints=self.known_constraints(),
            outcome=outcome or self.outcome,
        )


BENCHMARKS = {"regression": ReactorBenchmark(), "classification": BasketBenchmark()}


def get_benchmark(task: str):
    if task not in BENCHMARKS:
        raise ValueError(f"no benchmark for task '{task}'")
    return BENCHMARKS[task]
