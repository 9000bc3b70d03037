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
from .modeling_base import MODEL_FORMAT, PredictorWrapper, bootstrap_indices
from .modeling_mlp import Mlp, predict_mlp, train_mlp
from .modeling_tree import Ensemble, Tree, fit_forest, fit_gbt, fit_lmdt, fit_tree
from .modeling_uncertainty import UncertaintyModel, fit_uncertainty, residual_targets


SUPPORTED_PREDICTORS = (Mlp, Ensemble)
