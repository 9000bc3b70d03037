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
from .bounds import ActivationBounds, interval_affine, propagate_bounds
from .conformal_sets import (
    DEFAULT_EPS,
    add_classification_argmax,
    add_classification_conformal,
    add_regression_conformal,
    argmax_big_m,
    required_big_m,
)
from .formulations import (
    METHODS,
    Formulation,
    KnownConstraint,
    ProblemSpec,
    build_cmicl,
    build_micl,
    build_wmicl,
    encode_predictor,
    wmicl_threshold,
)
from .neural import EncodedOutput, encode_mlp, input_box
from .trees import encode_tree_ensemble
