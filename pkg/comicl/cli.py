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
import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict

from . import __version__
from .core import CalibrationInfeasibleError, ConfigError, NumericalBreakdownError
from .harness.config import ExperimentConfig
from .harness.coverage import COVERAGE_FILE, coverage_experiment
from .harness.experiment import REPORT_FILE, SUMMARY_FILE, ExperimentReport, run_experiment
from .harness.pipeline import CALIBRATION_FILE, DATA_FILE, ORACLE_FILE, Pipeline
from .mip.lp_writer import write_lp
from .utils import logging


logger = logging.get_logger(__name__)

MANIFEST_FILE = "manifest.json"
RESULTS_FILE = "solve.json"


@dataclass
class RunManifest:
    r"""
    Record of the artifacts a run has produced.

    Args:
        config_hash (`str`): SHA-256 of the canonical configuration.
        artifacts (`Dict[str, str]`): artifact name -> path.
        created (`str`): UTC timestamp of the first command.
        updated (`str`): UTC timestamp of the latest command.
        version (`str`): package version.
    """

    config_hash: str
    artifacts: Dict[str, str] = field(default_factory=dict)
    created: str = ""
    updated: str = ""
    version: str = __version__

    @classmethod
    def load_or_create(cls, output_dir, config_hash):
        path = os.path.join(output_dir, MANIFEST_FILE)
        now = datetime.now(timezone.utc).isoformat()
        if os.path.isfile(path):
            with open(path, "r", encoding="utf-8") as f:
                payload = json.load(f)
            if payload.get("config_hash") == config_hash:
                return cls(**payload)
            logger.warning(f"{path} belongs to another configuration, starting a new manifest")
        return cls(config_hash=config_hash, created=now, updated=now)

    def record(self, name, path):
        if not os.path.exists(path):
            raise FileNotFoundError(f"artifact '{name}' was not written: {path}")
        self.artifacts[name] = path

    def save(self, output_dir):
        self.updated = datetime.now(timezone.utc).isoformat()
        self.version = __version__
        os.makedirs(output_dir, exist_ok=True)
        path = os.path.join(output_dir, MANIFEST_FILE)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.__dict__, f, indent=2, sort_keys=True)
        return path


def _lp_path(path, method, n_methods):
    if n_methods == 1:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}_{method}{ext or '.lp'}"


def cmd_gen_data(args, config, pipeline, manifest):
    dataset, _ = pipeline.generate_data()
    manifest.record("dataset", pipeline.path(DATA_FILE))
    manifest.record("oracle", pipeline.path(ORACLE_FILE))
    print(f"wrote {dataset.n_rows} rows to {pipeline.path(DATA_FILE)}")


def cmd_train(args, config, pipeline, manifest):
    pipeline.train()
    for path in pipeline.model_paths():
        manifest.record(f"model/{os.path.basename(path)}", path)
        print(f"saved {path}")


def cmd_calibrate(args, config, pipeline, manifest):
    calibration = pipeline.calibrate()
    manifest.record("calibration", pipeline.path(CALIBRATION_FILE))
    print(json.dumps(calibration.to_dict(), sort_keys=True))


def cmd_solve(args, config, pipeline, manifest):
    artifacts = pipeline.load_artifacts()
    problem = pipeline.problem(args.instance)
    methods = config.problem.methods
    results = []
    for method in methods:
        formulation = pipeline.build(method, problem, artifacts)
        if args.emit_lp:
            lp_path = write_lp(formulation.model, _lp_path(args.emit_lp, method, len(methods)))
            manifest.record(f"lp/{method}", lp_path)
        result = pipeline.solve(formulation)
        record = {"instance": args.instance, "method": method}
        record.update(result.to_dict())
        if result.has_incumbent:
            record["x"] = formulation.decision(result.x).tolist()
        results.append(record)
        print(json.dumps({k: v for k, v in record.items() if k != "x"}, sort_keys=True))
    path = pipeline.path(RESULTS_FILE)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(results, f, indent=2)
    manifest.record("solve", path)


def cmd_experiment(args, config, pipeline, manifest):
    report = run_experiment(config, pipeline.output_dir, jobs=args.jobs)
    manifest.record("report", pipeline.path(REPORT_FILE))
    manifest.record("summary", pipeline.path(SUMMARY_FILE))
    print(report.summary_table(), end="")


def cmd_report(args, config, pipeline, manifest):
    report = ExperimentReport.from_csv(pipeline.path(REPORT_FILE))
    table = report.summary_table()
    with open(pipeline.path(SUMMARY_FILE), "w", encoding="utf-8") as f:
        f.write(table)
    manifest.record("summary", pipeline.path(SUMMARY_FILE))
    print(table, end="")


def cmd_coverage(args, config, pipeline, manifest):
    report = coverage_experiment(config, pipeline.output_dir)
    manifest.record("coverage", pipeline.path(COVERAGE_FILE))
    print(f"overall coverage {report.overall:.4f} on {report.n_test} test points")


COMMANDS = {
    "gen-data": (cmd_gen_data, "generate the synthetic dataset and oracle descriptor"),
    "train": (cmd_train, "train the predictor, uncertainty model and W-MICL ensemble"),
    "calibrate": (cmd_calibrate, "compute the conformal calibration record"),
    "solve": (cmd_solve, "build and solve one optimization instance per method"),
    "experiment": (cmd_experiment, "solve all instances and write the report"),
    "report": (cmd_report, "summarize an existing report CSV"),
    "coverage": (cmd_coverage, "measure empirical conformal coverage on fresh samples"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path of the JSON run configuration")
    common.add_argument("--seed", type=int, default=None, help="override the root seed of the configuration")
    common.add_argument("--output-dir", default=None, help="override experiment.output_dir")

    parser = argparse.ArgumentParser(prog="comicl", description="Conformal mixed-integer constraint learning")
    parser.add_argument("--version", action="version", version=f"comicl {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        subparser = subparsers.add_parser(name, parents=[common], help=help_text)
        if name == "solve":
            subparser.add_argument("--instance", type=int, default=0, help="index of the cost-vector stream")
            subparser.add_argument("--emit-lp", default=None, help="write the model(s) as LP text to this path")
        if name == "experiment":
            subparser.add_argument("--jobs", type=int, default=None, help="number of worker processes")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error(f"--jobs must be >= 1 - got {args.jobs}")
    if getattr(args, "instance", 0) < 0:
        parser.error(f"--instance must be >= 0 - got {args.instance}")
    try:
        config = ExperimentConfig.from_json(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        pipeline = Pipeline(config, args.output_dir)
        manifest = RunManifest.load_or_create(pipeline.output_dir, config.config_hash())
        command, _ = COMMANDS[args.command]
        command(args, config, pipeline, manifest)
        manifest.save(pipeline.output_dir)
    except (
        ConfigError,
        CalibrationInfeasibleError,
        FileNotFoundError,
        ValueError,
        NumericalBreakdownError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
