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
from .dataset import DEFAULT_TARGET, TASKS, DataSplit, Dataset, load_csv, read_csv_columns, save_csv, split
from .oracles import (
    BASKET_BOUNDS,
    BASKET_FEATURES,
    REACTOR_BOUNDS,
    REACTOR_FEATURES,
    SALT_INDEX,
    SUGAR_INDEX,
    Oracle,
    OutcomeSet,
    classify_score,
    oracle_feasible,
    synth_classification,
    synth_regression,
)
