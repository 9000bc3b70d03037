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
import os
import unittest
from unittest import mock

import numpy as np

from comicl.core import (
    ConfigError,
    ceil_rank,
    derive_seed,
    flatten_dict,
    format_float,
    round_half_up,
    stats_to_float,
)
from comicl.utils import logging


class SeedTester(unittest.TestCase):
    def test_derive_seed(self):
        self.assertEqual(derive_seed(7, "model"), derive_seed(7, "model"))
        self.assertNotEqual(derive_seed(7, "model"), derive_seed(7, "uncertainty"))
        self.assertNotEqual(derive_seed(7, "model"), derive_seed(8, "model"))
        self.assertNotEqual(derive_seed(7, "costs/0"), derive_seed(7, "costs/1"))
        self.assertTrue(0 <= derive_seed(0) < 2**32)
        with self.assertRaises(ValueError):
            derive_seed(-1, "model")


class RankTester(unittest.TestCase):
    def test_ceil_rank(self):
        EXPECTED_RANKS = [(0.9 * 20, 18), (18.0000000001, 18), (18.2, 19), (0.95 * 20, 19), (3.0, 3), (0.5, 1)]
        for value, rank in EXPECTED_RANKS:
            self.assertEqual(ceil_rank(value), rank, msg=value)

    def test_round_half_up(self):
        self.assertEqual(round_half_up(2.5), 3)
        self.assertEqual(round_half_up(0.8 * 80), 64)
        self.assertEqual(round_half_up(2.49), 2)


class StatsHelpersTester(unittest.TestCase):
    def test_flatten_dict(self):
        flat = flatten_dict({"cmicl": {"time": {"mean": 1.0}, "instances": 3}, "seed": 0})
        self.assertEqual(flat, {"cmicl/time/mean": 1.0, "cmicl/instances": 3, "seed": 0})
        with self.assertRaises(ValueError):
            flatten_dict({"a/b": 1})

    def test_stats_to_float(self):
        stats = stats_to_float({"a": np.float32(0.5), "b": np.int64(2), "c": 3, "d": True})
        self.assertEqual(stats, {"a": 0.5, "b": 2.0, "c": 3.0, "d": True})
        self.assertIsInstance(stats["b"], float)
        self.assertIsInstance(stats["d"], bool)

    def test_format_float(self):
        self.assertEqual(format_float(math.inf), "inf")
        self.assertEqual(format_float(-math.inf), "-inf")
        self.assertEqual(format_float(0.1), "0.1")
        self.assertEqual(float(format_float(1 / 3)), 1 / 3)

    def test_config_error(self):
        error = ConfigError("data.task", "unknown task")
        self.assertEqual(str(error), "data.task: unknown task")
        self.assertEqual(error.key_path, "data.task")
        self.assertEqual(str(ConfigError("", "not an object")), "not an object")


class LoggingTester(unittest.TestCase):
    def setUp(self):
        self.previous = logging.get_verbosity()

    def tearDown(self):
        logging._reset_library_root_logger()
        logging.set_verbosity(self.previous)

    def test_verbosity(self):
        EXPECTED_LEVELS = [
            (logging.set_verbosity_debug, logging.DEBUG),
            (logging.set_verbosity_info, logging.INFO),
            (logging.set_verbosity_error, logging.ERROR),
            (logging.set_verbosity_warning, logging.WARNING),
        ]
        for setter, level in EXPECTED_LEVELS:
            setter()
            self.assertEqual(logging.get_verbosity(), level)
            self.assertEqual(logging.get_logger("comicl.solver").getEffectiveLevel(), level)

    def test_env_level(self):
        with mock.patch.dict(os.environ, {"COMICL_LOG": "Info"}):
            logging._reset_library_root_logger()
            self.assertEqual(logging.get_verbosity(), logging.INFO)
        with mock.patch.dict(os.environ, {"COMICL_LOG": "loud"}):
            logging._reset_library_root_logger()
            with self.assertLogs(level="WARNING") as captured:
                self.assertEqual(logging.get_verbosity(), logging.WARNING)
            self.assertIn("COMICL_LOG=loud", captured.output[0])
