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
import multiprocessing
import os
from dataclasses import dataclass, field
from typing import List, Optional

import datasets
import numpy as np
from tqdm import tqdm

from ..core import CalibrationInfeasibleError, NumericalBreakdownError, format_float
from ..data.dataset import read_csv_columns
from ..data.oracles import oracle_feasible
from ..encoders.formulations import METHODS
from ..solver.branch_and_bound import SOLVED_STATUSES
from ..utils import logging
from .base import BaseRunner
from .pipeline import Artifacts, Pipeline
from .utils import compute_ci, delta_percent


logger = logging.get_logger(__name__)

REPORT_FILE = "report.csv"
SUMMARY_FILE = "summary.txt"
REPORT_COLUMNS = (
    "instance_id",
    "method",
    "alpha",
    "status",
    "objective",
    "bound",
    "gap",
    "solve_seconds",
    "oracle_feasible",
    "predictor_value",
)
FAILED_STATUSES = ("error", "calibration-infeasible")


@dataclass
class InstanceRecord:
    r"""
    Outcome of one method on one cost vector.

    Args:
        instance_id (`int`): index of the cost vector.
        method (`str`): `micl`, `wmicl` or `cmicl`.
        alpha (`float`): miscoverage level of the run.
        status (`str`): solver status, or `error` / `calibration-infeasible` when no solve took place.
        objective (`float`, *optional*): incumbent objective.
        bound (`float`, *optional*): best bound.
        gap (`float`, *optional*): relative gap.
        solve_seconds (`float`): wall time of the branch-and-bound search, model build excluded.
        oracle_feasible (`bool`, *optional*): `h(x*) in Y` under the noiseless oracle, for solved instances only.
        predictor_value (`float`, *optional*):
            Native prediction at `x*` (predicted class for classification); for W-MICL the number of members whose
            prediction lies in the target set.
        cost_seed (`int`, *optional*): seed of the cost vector.
        solution (`List[float]`, *optional*): decision vector `x*`.
    """

    instance_id: int
    method: str
    alpha: float
    status: str
    objective: Optional[float] = None
    bound: Optional[float] = None
    gap: Optional[float] = None
    solve_seconds: float = 0.0
    oracle_feasible: Optional[bool] = None
    predictor_value: Optional[float] = None
    cost_seed: Optional[int] = None
    solution: Optional[List[float]] = None

    @property
    def solved(self):
        return self.status in SOLVED_STATUSES and self.objective is not None

    def to_row(self):
        def text(value):
            if value is None:
                return ""
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, (int, np.integer)):
                return str(int(value))
            return format_float(value)

        return {
            "instance_id": str(self.instance_id),
            "method": self.method,
            "alpha": text(self.alpha),
            "status": self.status,
            "objective": text(self.objective),
            "bound": text(self.bound),
            "gap": text(self.gap),
            "solve_seconds": text(self.solve_seconds),
            "oracle_feasible": text(self.oracle_feasible),
            "predictor_value": text(self.predictor_value),
        }

    @classmethod
    def from_row(cls, row):
        def number(value):
            return None if value == "" else float(value)

        flag = row["oracle_feasible"]
        return cls(
            instance_id=int(row["instance_id"]),
            method=row["method"],
            alpha=float(row["alpha"]),
            status=row["status"],
            objective=number(row["objective"]),
            bound=number(row["bound"]),
            gap=number(row["gap"]),
            solve_seconds=float(row["solve_seconds"]),
            oracle_feasible=None if flag == "" else flag == "true",
            predictor_value=number(row["predictor_value"]),
        )


def _ci(values, proportion=False):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), math.nan
    return compute_ci(values, proportion=proportion)


@dataclass
class ExperimentReport:
    """Per-instance records with aggregate metrics per method."""

    records: List[InstanceRecord] = field(default_factory=list)

    def __post_init__(self):
        order = {method: i for i, method in enumerate(METHODS)}
        self.records = sorted(self.records, key=lambda r: (r.instance_id, order.get(r.method, len(order))))

    @property
    def methods(self):
        present = {record.method for record in self.records}
        return [method for method in METHODS if method in present]

    def for_method(self, method):
        return [record for record in self.records if record.method == method]

    def feasibility(self, method):
        """Ground-truth feasibility rate over solved instances: `(rate, ci95 half-width, n)`."""
        records = self.for_method(method)
        flags = [float(r.oracle_feasible) for r in records if r.solved and r.oracle_feasible is not None]
        rate, half_width = _ci(flags, proportion=True)
        return rate, half_width, len(flags)

    def solve_time(self, method):
        """Mean solve time over every instance that reached the solver: `(mean, ci95 half-width)`."""
        times = [r.solve_seconds for r in self.for_method(method) if r.status not in FAILED_STATUSES]
        return _ci(times)

    def deltas(self, method, reference="cmicl"):
        """Per-instance relative objective distance to `reference`, in percent, where both are solved."""
        references = {r.instance_id: r for r in self.for_method(reference) if r.solved}
        values = []
        for record in self.for_method(method):
            other = references.get(record.instance_id)
            if record.solved and other is not None and other.objective != 0:
                values.append(delta_percent(record.objective, other.objective))
        return values

    def summary(self):
        stats = {}
        for method in self.methods:
            records = self.for_method(method)
            rate, rate_ci, n_rate = self.feasibility(method)
            time_mean, time_ci = self.solve_time(method)
            delta_mean, delta_ci = _ci(self.deltas(method))
            stats[method] = {
                "instances": len(records),
                "solved": sum(1 for r in records if r.solved),
                "feasibility": {"rate": rate, "ci95": rate_ci, "n": n_rate},
                "time": {"mean": time_mean, "ci95": time_ci},
                "delta": {"mean": delta_mean, "ci95": delta_ci},
            }
        return stats

    def summary_table(self):
        header = (
            f"{'method':<8}{'instances':>10}{'solved':>8}{'feas_rate':>11}{'feas_ci95':>11}"
            f"{'time_mean':>11}{'time_ci95':>11}{'delta_pct':>11}{'delta_ci95':>11}"
        )
        lines = [header]
        for method, stats in self.summary().items():
            lines.append(
                f"{method:<8}{stats['instances']:>10d}{stats['solved']:>8d}"
                f"{stats['feasibility']['rate']:>11.4f}{stats['feasibility']['ci95']:>11.4f}"
                f"{stats['time']['mean']:>11.4f}{stats['time']['ci95']:>11.4f}"
                f"{stats['delta']['mean']:>11.3f}{stats['delta']['ci95']:>11.3f}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self, path):
        rows = [record.to_row() for record in self.records]
        columns = {name: [row[name] for row in rows] for name in REPORT_COLUMNS}
        features = datasets.Features({name: datasets.Value("string") for name in REPORT_COLUMNS})
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        datasets.Dataset.from_dict(columns, features=features).to_csv(path, index=False)
        return path

    @classmethod
    def from_csv(cls, path):
        columns = read_csv_columns(path)
        missing = [name for name in REPORT_COLUMNS if name not in columns]
        if missing:
            raise ValueError(f"{path} lacks report columns: {', '.join(missing)}")
        n_rows = len(columns["instance_id"])
        records = [InstanceRecord.from_row({name: columns[name][i] for name in REPORT_COLUMNS}) for i in range(n_rows)]
        return cls(records=records)


def _native_value(method, artifacts: Artifacts, outcome, x):
    if method == "wmicl":
        values = [member.predict_one(x) for member in artifacts.members]
        if outcome.is_classification:
            values = [int(np.argmax(v)) for v in values]
        return float(sum(outcome.contains(v) for v in values))
    value = artifacts.predictor.predict_one(x)
    if outcome.is_classification:
        return float(np.argmax(value))
    return float(value)


def solve_instance(pipeline: Pipeline, artifacts: Artifacts, instance_id: int, method: str) -> InstanceRecord:
    """Build and solve one instance, then evaluate its solution with the noiseless oracle."""
    alpha = pipeline.config.conformal.alpha
    cost_seed = pipeline.seed_for(f"costs/{instance_id}")
    record = InstanceRecord(instance_id=instance_id, method=method, alpha=alpha, status="error", cost_seed=cost_seed)
    problem = pipeline.problem(instance_id)
    try:
        formulation = pipeline.build(method, problem, artifacts)
        result = pipeline.solve(formulation)
    except CalibrationInfeasibleError as e:
        record.status = "calibration-infeasible"
        logger.warning(f"instance {instance_id} ({method}): {e}")
        return record
    except (ValueError, NumericalBreakdownError) as e:
        logger.error(f"instance {instance_id} ({method}) failed: {e}")
        return record

    record.status = result.status
    record.bound = result.bound
    record.gap = result.gap
    record.solve_seconds = result.seconds
    if result.has_incumbent:
        x = np.clip(formulation.decision(result.x), problem.lower, problem.upper)
        record.objective = result.objective
        record.solution = x.tolist()
        record.predictor_value = _native_value(method, artifacts, problem.outcome, x)
        if record.solved:
            record.oracle_feasible = oracle_feasible(artifacts.oracle, x, problem.outcome)
    return record


def _worker(payload):
    config, output_dir, artifacts, instance_id, method = payload
    return solve_instance(Pipeline(config, output_dir), artifacts, instance_id, method)


class ExperimentRunner(BaseRunner):
    """Solve every (instance, method) pair of the configuration and aggregate a report."""

    def run(self, artifacts: Optional[Artifacts] = None, jobs: Optional[int] = None) -> ExperimentReport:
        pipeline = Pipeline(self.config, self.output_dir)
        if artifacts is None:
            artifacts = pipeline.load_artifacts()
        jobs = jobs or self.config.experiment.jobs
        tasks = [
            (self.config, self.output_dir, artifacts, i, method)
            for i in range(self.config.experiment.n_instances)
            for method in self.config.problem.methods
        ]
        if jobs == 1:
            records = [_worker(task) for task in tqdm(tasks, desc="instances")]
        else:
            with multiprocessing.Pool(jobs) as pool:
                records = list(tqdm(pool.imap(_worker, tasks), total=len(tasks), desc="instances"))

        report = ExperimentReport(records=records)
        os.makedirs(self.output_dir, exist_ok=True)
        report.to_csv(self.path(REPORT_FILE))
        with open(self.path(SUMMARY_FILE), "w", encoding="utf-8") as f:
            f.write(report.summary_table())
        self.log_stats(report.summary())
        return report


def run_experiment(config, output_dir=None, artifacts=None, jobs=None) -> ExperimentReport:
    """Run the optimization experiment; writes `report.csv` and `summary.txt` to the output directory."""
    return ExperimentRunner(config, output_dir).run(artifacts=artifacts, jobs=jobs)
