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
import collections.abc
import math
import zlib

import numpy as np


U_FLOOR = 1e-3
FEASIBILITY_TOL = 1e-6
INTEGRALITY_TOL = 1e-6
LP_FEASIBILITY_TOL = 1e-7
SPLIT_EPS = 1e-6

# absorbs representation error in products such as 0.9 * 20
_RANK_SLACK = 1e-9


class ConfigError(ValueError):
    """Invalid configuration value. `key_path` is the dotted path of the offending key."""

    def __init__(self, key_path, message):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class CalibrationInfeasibleError(ValueError):
    """Raised when an infinite conformal quantile makes the conformal constraint unsatisfiable."""

    def __init__(self, message="the conformal quantile is infinite"):
        super().__init__(f"calibration-infeasible: {message}")


class NumericalBreakdownError(RuntimeError):
    def __init__(self, message, pivots):
        self.pivots = pivots
        super().__init__(f"{message} (after {pivots} pivots)")


def derive_seed(root, *names):
    """
    Derive an independent 32-bit seed for the random stream `names` from the root seed.

    Stream names are hashed with CRC-32 and mixed with the root seed by `numpy.random.SeedSequence`,
    so `derive_seed(7, "model")` and `derive_seed(7, "uncertainty")` never share a stream.
    """
    root = int(root)
    if root < 0:
        raise ValueError(f"root seed must be non-negative - got {root}")
    entropy = [root] + [zlib.crc32(str(name).encode("utf-8")) for name in names]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)[0])


def ceil_rank(value):
    """Ceiling that ignores floating-point noise just above an integer."""
    return int(math.ceil(value - _RANK_SLACK))


def round_half_up(value):
    return int(math.floor(value + 0.5))


def flatten_dict(nested, sep="/"):
    """Flatten dictionary and concatenate nested keys with separator."""

    def rec(nest, prefix, into):
        for k, v in nest.items():
            if sep in k:
                raise ValueError(f"separator '{sep}' not allowed to be in key '{k}'")
            if isinstance(v, collections.abc.Mapping):
                rec(v, prefix + k + sep, into)
            else:
                into[prefix + k] = v

    flat = {}
    rec(nested, "", flat)
    return flat


def stats_to_float(stats_dict):
    """Cast numpy scalars in a stats dict to python floats."""
    new_dict = dict()
    for k, v in stats_dict.items():
        if isinstance(v, np.generic):
            v = v.item()
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            v = float(v)
        new_dict[k] = v
    return new_dict


def format_float(value):
    """Text form used by every serializer: `inf`/`-inf` for infinities, shortest round-trip repr otherwise."""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)
