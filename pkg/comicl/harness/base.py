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

import wandb

from ..core import derive_seed, flatten_dict, stats_to_float
from ..utils import logging


logger = logging.get_logger(__name__)


class BaseRunner(object):
    r"""
    Base class for all runners - this base class implements the basic functions that we
    need for a run driven by an `ExperimentConfig`.

    The runner needs to have the following functions:
        - run: executes the stage and returns its result
    Subclasses get seeded random streams, artifact paths below the output directory and
    statistics logging.
    """

    def __init__(self, config, output_dir=None):
        self.config = config
        self.output_dir = output_dir or config.experiment.output_dir
        self._wandb_run = None

    def run(self, *args):
        raise NotImplementedError("Not implemented")

    def seed_for(self, *names):
        return derive_seed(self.config.seed, *names)

    def path(self, *parts):
        return os.path.join(self.output_dir, *parts)

    def ensure_dir(self, *parts):
        path = self.path(*parts)
        os.makedirs(path, exist_ok=True)
        return path

    def log_stats(self, stats, step=None):
        """Log a (possibly nested) stats dict; to wandb as well when `log_with_wandb` is set."""
        flat = stats_to_float(flatten_dict(stats))
        for key in sorted(flat):
            logger.info(f"{key}: {flat[key]}")
        if self.config.experiment.log_with_wandb:
            if self._wandb_run is None:
                self._wandb_run = wandb.init(
                    project=self.config.experiment.wandb_project, config=self.config.to_dict(), reinit=True
                )
            wandb.log(flat, step=step)
        return flat
