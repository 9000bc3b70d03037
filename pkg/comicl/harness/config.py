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
import dataclasses
import hashlib
import json
import math
import os
import typing
from dataclasses import dataclass, field
from typing import List, Optional

from ..core import ConfigError
from ..data.dataset import TASKS
from ..encoders.formulations import METHODS


FAMILIES = ("mlp", "tree", "forest", "gbt", "lmdt")
DEFAULT_N_SAMPLES = {"regression": 1000, "classification": 2500}
DEFAULT_TRAIN_FRACTION = {"regression": 0.8, "classification": 0.92}
DEFAULT_MIN_SAMPLES_SPLIT = {"mlp": 2, "tree": 2, "forest": 3, "gbt": 5, "lmdt": 10}


def _check(condition, path, message):
    if not condition:
        raise ConfigError(path, message)


def _coerce(value, hint, path):
    """Strict type check of a JSON value against a type hint. Ints are accepted for floats, never bools."""
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [arg for arg in typing.get_args(hint) if arg is not type(None)]
        if value is None:
            return None
        return _coerce(value, args[0], path)
    if origin in (list, List):
        _check(isinstance(value, list), path, f"expected a list - got {type(value).__name__}")
        (item_hint,) = typing.get_args(hint)
        return [_coerce(item, item_hint, f"{path}[{i}]") for i, item in enumerate(value)]
    if hint is bool:
        _check(isinstance(value, bool), path, f"expected a boolean - got {value!r}")
        return value
    if hint is int:
        _check(isinstance(value, int) and not isinstance(value, bool), path, f"expected an integer - got {value!r}")
        return value
    if hint is float:
        _check(
            isinstance(value, (int, float)) and not isinstance(value, bool), path, f"expected a number - got {value!r}"
        )
        _check(math.isfinite(value), path, f"expected a finite number - got {value!r}")
        return float(value)
    if hint is str:
        _check(isinstance(value, str), path, f"expected a string - got {value!r}")
        return value
    raise TypeError(f"unsupported config type {hint}")


class _Section(object):
    """Strict parsing shared by every config section."""

    @classmethod
    def from_dict(cls, payload, path):
        _check(isinstance(payload, dict), path, f"expected an object - got {type(payload).__name__}")
        hints = typing.get_type_hints(cls)
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in payload.items():
            _check(key in names, f"{path}.{key}", "unknown key")
            kwargs[key] = _coerce(value, hints[key], f"{path}.{key}")
        section = cls(**kwargs)
        section.validate(path)
        return section

    def validate(self, path):
        pass

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class DataConfig(_Section):
    """
    Synthetic dataset generation.

    Args:
        task (`str`, *optional*, defaults to `"regression"`):
            `regression` (reactor oracle) or `classification` (basket oracle)
        n_samples (`int`, *optional*):
            Number of rows; 1000 for regression and 2500 for classification when unset
        noise_sigma (`float`, *optional*, defaults to 0.5):
            Standard deviation of the regression observation noise
        train_fraction (`float`, *optional*):
            Share of rows used for training, the rest calibrates; 0.8 / 0.92 when unset
        class_thresholds (`List[float]`, *optional*, defaults to `[0.25, 0.5, 0.75]`):
            Cut points of the classification score
    """

    task: str = "regression"
    n_samples: Optional[int] = None
    noise_sigma: float = 0.5
    train_fraction: Optional[float] = None
    class_thresholds: List[float] = field(default_factory=lambda: [0.25, 0.5, 0.75])

    def validate(self, path):
        _check(self.task in TASKS, f"{path}.task", f"must be one of {TASKS} - got {self.task!r}")
        _check(self.n_samples is None or self.n_samples >= 2, f"{path}.n_samples", "must be >= 2")
        _check(self.noise_sigma >= 0, f"{path}.noise_sigma", "must be >= 0")
        _check(
            self.train_fraction is None or 0.0 < self.train_fraction < 1.0,
            f"{path}.train_fraction",
            "must lie in (0, 1)",
        )
        thresholds = self.class_thresholds
        _check(
            len(thresholds) >= 1
            and all(0.0 < t < 1.0 for t in thresholds)
            and all(a < b for a, b in zip(thresholds, thresholds[1:])),
            f"{path}.class_thresholds",
            "must be strictly ascending values in (0, 1)",
        )

    @property
    def resolved_n_samples(self):
        return self.n_samples if self.n_samples is not None else DEFAULT_N_SAMPLES[self.task]

    @property
    def resolved_train_fraction(self):
        return self.train_fraction if self.train_fraction is not None else DEFAULT_TRAIN_FRACTION[self.task]


@dataclass
class ModelConfig(_Section):
    """
    Predictor and uncertainty model training.

    Args:
        family (`str`, *optional*, defaults to `"mlp"`):
            Predictor family: `mlp`, `tree`, `forest`, `gbt` or `lmdt` (classification supports `mlp` only)
        hidden_sizes (`List[int]`, *optional*, defaults to `[12]`):
            Hidden layer widths of the predictor network
        epochs (`int`, *optional*, defaults to 2000):
            Full-batch gradient steps
        learning_rate (`float`, *optional*, defaults to 0.05):
            SGD learning rate
        l2 (`float`, *optional*, defaults to 0.01):
            Weight decay of the predictor network
        uncertainty_hidden_sizes (`List[int]`, *optional*, defaults to `[12]`):
            Hidden layer widths of the uncertainty network
        uncertainty_epochs (`int`, *optional*, defaults to 2000):
            Gradient steps of the uncertainty network
        uncertainty_learning_rate (`float`, *optional*, defaults to 0.05):
            Learning rate of the uncertainty network
        uncertainty_l2 (`float`, *optional*, defaults to 0.001):
            Weight decay of the uncertainty network
        u_floor (`float`, *optional*, defaults to 1e-3):
            Lower clamp of the uncertainty prediction
        max_depth (`int`, *optional*, defaults to 5):
            Depth of every tree
        n_trees (`int`, *optional*, defaults to 15):
            Trees of a forest or stages of a boosted ensemble
        min_samples_split (`int`, *optional*):
            Smallest node that can be split; 2 (tree), 3 (forest), 5 (gbt) or 10 (lmdt) when unset
        max_features (`float`, *optional*, defaults to 0.6):
            Share of features considered per split in forests and boosted ensembles
        gbt_learning_rate (`float`, *optional*, defaults to 0.2):
            Shrinkage of boosted ensembles
    """

    family: str = "mlp"
    hidden_sizes: List[int] = field(default_factory=lambda: [12])
    epochs: int = 2000
    learning_rate: float = 0.05
    l2: float = 0.01
    uncertainty_hidden_sizes: List[int] = field(default_factory=lambda: [12])
    uncertainty_epochs: int = 2000
    uncertainty_learning_rate: float = 0.05
    uncertainty_l2: float = 0.001
    u_floor: float = 1e-3
    max_depth: int = 5
    n_trees: int = 15
    min_samples_split: Optional[int] = None
    max_features: float = 0.6
    gbt_learning_rate: float = 0.2

    def validate(self, path):
        _check(self.family in FAMILIES, f"{path}.family", f"must be one of {FAMILIES} - got {self.family!r}")
        for name in ("hidden_sizes", "uncertainty_hidden_sizes"):
            for i, width in enumerate(getattr(self, name)):
                _check(width >= 1, f"{path}.{name}[{i}]", "must be >= 1")
        for name in ("epochs", "uncertainty_epochs", "n_trees"):
            _check(getattr(self, name) >= 1, f"{path}.{name}", "must be >= 1")
        for name in ("learning_rate", "uncertainty_learning_rate", "u_floor", "gbt_learning_rate"):
            _check(getattr(self, name) > 0, f"{path}.{name}", "must be > 0")
        for name in ("l2", "uncertainty_l2"):
            _check(getattr(self, name) >= 0, f"{path}.{name}", "must be >= 0")
        _check(self.max_depth >= 0, f"{path}.max_depth", "must be >= 0")
        _check(
            self.min_samples_split is None or self.min_samples_split >= 2, f"{path}.min_samples_split", "must be >= 2"
        )
        _check(0.0 < self.max_features <= 1.0, f"{path}.max_features", "must lie in (0, 1]")

    @property
    def resolved_min_samples_split(self):
        if self.min_samples_split is not None:
            return self.min_samples_split
        return DEFAULT_MIN_SAMPLES_SPLIT[self.family]


@dataclass
class ConformalConfig(_Section):
    """
    Conformal calibration.

    Args:
        alpha (`float`, *optional*, defaults to 0.1):
            Miscoverage level
        mondrian (`bool`, *optional*, defaults to False):
            Calibrate one quantile per feasibility group instead of a marginal quantile
        big_m (`float`, *optional*):
            Big-M of the classification conformal constraint; derived from the calibration logits when unset
        big_m_safety (`float`, *optional*, defaults to 4.0):
            Safety factor applied to the largest calibration logit
        eps (`float`, *optional*, defaults to 1e-6):
            Strictness of conformal set exclusion
    """

    alpha: float = 0.1
    mondrian: bool = False
    big_m: Optional[float] = None
    big_m_safety: float = 4.0
    eps: float = 1e-6

    def validate(self, path):
        _check(0.0 < self.alpha < 1.0, f"{path}.alpha", f"must lie in (0, 1) - got {self.alpha}")
        _check(self.big_m is None or self.big_m > 0, f"{path}.big_m", "must be > 0")
        _check(self.big_m_safety > 0, f"{path}.big_m_safety", "must be > 0")
        _check(self.eps > 0, f"{path}.eps", "must be > 0")


@dataclass
class ProblemConfig(_Section):
    """
    Optimization instances.

    Args:
        methods (`List[str]`, *optional*, defaults to `["micl", "wmicl", "cmicl"]`):
            Formulations to build and solve
        n_models (`int`, *optional*, defaults to 5):
            Ensemble size P of W-MICL
        bootstrap_fraction (`float`, *optional*, defaults to 0.5):
            Bootstrap sample size of every W-MICL member, as a share of the training rows
        cost_low (`float`, *optional*, defaults to 0.5):
            Smallest cost coefficient
        cost_high (`float`, *optional*, defaults to 2.0):
            Largest cost coefficient
        outcome_lower (`float`, *optional*):
            Overrides the lower end of the regression target interval
        outcome_upper (`float`, *optional*):
            Overrides the upper end of the regression target interval
        desired_classes (`List[int]`, *optional*):
            Overrides the desired classes of the classification benchmark
    """

    methods: List[str] = field(default_factory=lambda: list(METHODS))
    n_models: int = 5
    bootstrap_fraction: float = 0.5
    cost_low: float = 0.5
    cost_high: float = 2.0
    outcome_lower: Optional[float] = None
    outcome_upper: Optional[float] = None
    desired_classes: Optional[List[int]] = None

    def validate(self, path):
        _check(len(self.methods) >= 1, f"{path}.methods", "must name at least one method")
        for i, method in enumerate(self.methods):
            _check(method in METHODS, f"{path}.methods[{i}]", f"must be one of {METHODS} - got {method!r}")
        _check(len(set(self.methods)) == len(self.methods), f"{path}.methods", "must not repeat a method")
        _check(self.n_models >= 1, f"{path}.n_models", "must be >= 1")
        _check(0.0 < self.bootstrap_fraction <= 1.0, f"{path}.bootstrap_fraction", "must lie in (0, 1]")
        _check(0.0 < self.cost_low <= self.cost_high, f"{path}.cost_high", "needs 0 < cost_low <= cost_high")
        if self.outcome_lower is not None and self.outcome_upper is not None:
            _check(self.outcome_lower < self.outcome_upper, f"{path}.outcome_upper", "must exceed outcome_lower")
        if self.desired_classes is not None:
            _check(len(self.desired_classes) >= 1, f"{path}.desired_classes", "must not be empty")


@dataclass
class SolverConfig(_Section):
    """
    Branch and bound limits.

    Args:
        rel_gap (`float`, *optional*, defaults to 0.01):
            Relative optimality gap at which the search stops
        node_limit (`int`, *optional*, defaults to 20000):
            Maximum number of LP relaxations per solve
        time_limit (`float`, *optional*, defaults to 60.0):
            Wall-clock limit per solve, in seconds
    """

    rel_gap: float = 0.01
    node_limit: int = 20000
    time_limit: float = 60.0

    def validate(self, path):
        _check(self.rel_gap >= 0, f"{path}.rel_gap", "must be >= 0")
        _check(self.node_limit >= 1, f"{path}.node_limit", "must be >= 1")
        _check(self.time_limit > 0, f"{path}.time_limit", "must be > 0")


@dataclass
class HarnessConfig(_Section):
    """
    Experiment protocol (the `experiment` section).

    Args:
        n_instances (`int`, *optional*, defaults to 100):
            Number of random cost vectors
        jobs (`int`, *optional*, defaults to 1):
            Worker processes solving instances
        n_test (`int`, *optional*, defaults to 1000):
            Fresh oracle samples of the coverage experiment
        output_dir (`str`, *optional*, defaults to `"comicl_run"`):
            Directory receiving every artifact
        log_with_wandb (`bool`, *optional*, defaults to False):
            Log statistics with wandb
        wandb_project (`str`, *optional*, defaults to `"comicl"`):
            Name of wandb project
    """

    n_instances: int = 100
    jobs: int = 1
    n_test: int = 1000
    output_dir: str = "comicl_run"
    log_with_wandb: bool = False
    wandb_project: str = "comicl"

    def validate(self, path):
        _check(self.n_instances >= 1, f"{path}.n_instances", "must be >= 1")
        _check(self.jobs >= 1, f"{path}.jobs", "must be >= 1")
        _check(self.n_test >= 1, f"{path}.n_test", "must be >= 1")
        _check(bool(self.output_dir), f"{path}.output_dir", "must not be empty")


SECTIONS = {
    "data": DataConfig,
    "model": ModelConfig,
    "conformal": ConformalConfig,
    "problem": ProblemConfig,
    "solver": SolverConfig,
    "experiment": HarnessConfig,
}


@dataclass
class ExperimentConfig(object):
    """
    Configuration of a whole run: one JSON document with the sections `data`, `model`, `conformal`, `problem`,
    `solver`, `experiment` and the root `seed` every random stream derives from.

    Args:
        seed (`int`, *optional*, defaults to 0):
            Root seed
    """

    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    conformal: ConformalConfig = field(default_factory=ConformalConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    experiment: HarnessConfig = field(default_factory=HarnessConfig)

    def __post_init__(self):
        _check(
            isinstance(self.seed, int) and not isinstance(self.seed, bool) and self.seed >= 0,
            "seed",
            f"must be a non-negative integer - got {self.seed!r}",
        )
        if self.data.task == "classification":
            _check(self.model.family == "mlp", "model.family", "classification needs the mlp family (logit outputs)")
            n_classes = len(self.data.class_thresholds) + 1
            for i, k in enumerate(self.problem.desired_classes or []):
                _check(0 <= k < n_classes, f"problem.desired_classes[{i}]", f"must lie in 0..{n_classes - 1}")

    @classmethod
    def from_dict(cls, payload):
        _check(isinstance(payload, dict), "", "the configuration must be a JSON object")
        kwargs = {}
        for key, value in payload.items():
            if key == "seed":
                kwargs["seed"] = _coerce(value, int, "seed")
            elif key in SECTIONS:
                kwargs[key] = SECTIONS[key].from_dict(value, key)
            else:
                raise ConfigError(key, "unknown key")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path):
        if not os.path.isfile(path):
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError("", f"{path} is not valid JSON: {e}")
        return cls.from_dict(payload)

    def to_dict(self):
        output_dict = {"seed": self.seed}
        for key in SECTIONS:
            output_dict[key] = getattr(self, key).to_dict()
        return output_dict

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        return path

    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_seed(self, seed):
        return dataclasses.replace(self, seed=seed)
