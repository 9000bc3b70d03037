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
import tempfile
import unittest

import numpy as np

from comicl.mip import LinExpr, MipModel, emit_lp_text, quicksum, write_lp


GOLDEN_LP = os.path.join(os.path.dirname(__file__), "assets", "golden.lp")


def build_golden_model():
    model = MipModel("golden")
    x = model.add_var("x", lb=0.0, ub=1500.0)
    b = model.add_var("b", kind="binary")
    n = model.add_var("n", kind="integer", lb=0.0, ub=10.0)
    y = model.add_var("y", lb=-math.inf, ub=math.inf)
    model.set_objective(3 * x - y + 2)
    model.add_constraint(x + x - 2.5 * n, "<=", 4.0, label="cap")
    model.add_constraint(x - 1500 * b, "<=", 0.0, label="link")
    model.add_constraint(y - n + 1, "==", 0.0, label="bal")
    model.add_constraint(0.1 * x, ">=", 0.25, label="floor")
    return model


class MipModelTester(unittest.TestCase):
    """
    Testing suite for the MIP model builder
    """

    def setUp(self):
        self.model = MipModel("unit")

    def test_auto_names(self):
        first = self.model.add_var()
        second = self.model.add_var()
        self.assertEqual(self.model.variables[first.index].name, "x0")
        self.assertEqual(self.model.variables[second.index].name, "x1")
        self.model.add_constraint(first + second, "<=", 1.0)
        self.assertEqual(self.model.constraints[0].label, "c0")

    def test_normalization(self):
        x = self.model.add_var("x")
        y = self.model.add_var("y")
        self.model.add_constraint(y + x + x - x + 3, "<=", 5.0, label="row")
        row = self.model.constraint("row")
        self.assertEqual([(coef, var.index) for coef, var in row.expr.terms], [(1.0, 0), (1.0, 1)])
        self.assertEqual(row.rhs, 2.0)
        self.assertEqual(row.expr.constant, 0.0)
        self.model.add_constraint(x - x, "<=", 1.0, label="empty")
        self.assertEqual(self.model.constraint("empty").expr.terms, [])

    def test_quicksum(self):
        xs = [self.model.add_var() for _ in range(3)]
        expr = quicksum([2 * v for v in xs] + [1.5])
        self.assertEqual(self.model.evaluate(expr, [1.0, 2.0, 3.0]), 13.5)

    def test_errors(self):
        EXPECTED_ERRORS = [
            lambda m: m.add_var(kind="semicontinuous"),
            lambda m: m.add_var(lb=2.0, ub=1.0),
            lambda m: m.add_var(lb=math.nan),
            lambda m: m.add_var(kind="binary", ub=2.0),
        ]
        for build in EXPECTED_ERRORS:
            with self.assertRaises(ValueError):
                build(self.model)

        x = self.model.add_var("x")
        with self.assertRaisesRegex(ValueError, "duplicate variable"):
            self.model.add_var("x")
        self.model.add_constraint(x, "<=", 1.0, label="row")
        with self.assertRaisesRegex(ValueError, "duplicate constraint"):
            self.model.add_constraint(x, ">=", 0.0, label="row")
        with self.assertRaises(ValueError):
            self.model.add_constraint(x, "<", 1.0)
        with self.assertRaises(ValueError):
            self.model.add_constraint(x, "<=", math.inf)
        with self.assertRaises(ValueError):
            self.model.set_objective(x, sense="maximize")
        with self.assertRaises(ValueError):
            LinExpr([(math.inf, x)])
        with self.assertRaises(ValueError):
            (x + 1) * (x + 1)

    def test_foreign_variable(self):
        other = MipModel("other")
        foreign = other.add_var("z")
        self.model.add_var("x")
        with self.assertRaisesRegex(ValueError, "not issued"):
            self.model.add_constraint(foreign, "<=", 1.0)
        with self.assertRaises(ValueError):
            self.model.set_objective(foreign)

    def test_bounds(self):
        x = self.model.add_var("x", lb=0.0, ub=10.0)
        b = self.model.add_var("b", kind="binary")
        self.model.fix(x, 3.0)
        self.assertEqual((self.model.variables[0].lb, self.model.variables[0].ub), (3.0, 3.0))
        with self.assertRaises(ValueError):
            self.model.set_bounds(b, 0.0, 2.0)
        with self.assertRaises(ValueError):
            self.model.set_bounds(x, 5.0, 4.0)

    def test_violations(self):
        x = self.model.add_var("x", lb=0.0, ub=5.0)
        n = self.model.add_var("n", kind="integer", lb=0.0, ub=3.0)
        self.model.add_constraint(x + n, "<=", 4.0, label="budget")
        self.model.add_constraint(x - n, "==", 1.0, label="gap")
        self.assertTrue(self.model.check_feasible([2.0, 1.0]))
        self.assertEqual(self.model.violations([6.0, 0.5]), ["bound:x", "integrality:n", "budget", "gap"])
        with self.assertRaises(ValueError):
            self.model.violations([1.0])

    def test_to_arrays(self):
        model = build_golden_model()
        arrays = model.to_arrays()
        self.assertEqual(arrays.A.shape, (4, 4))
        np.testing.assert_array_equal(arrays.c, [3.0, 0.0, 0.0, -1.0])
        self.assertEqual(arrays.c0, 2.0)
        np.testing.assert_array_equal(arrays.senses, [-1, -1, 0, 1])
        np.testing.assert_array_equal(arrays.b, [4.0, 0.0, -1.0, 0.25])
        np.testing.assert_array_equal(arrays.integrality, [False, True, True, False])
        self.assertEqual(model.num_integer, 2)


class LpWriterTester(unittest.TestCase):
    """
    Testing suite for the LP text writer
    """

    def test_golden(self):
        r"""
        Test the emitted text of a small mixed model against the stored golden file
        """
        with open(GOLDEN_LP, encoding="utf-8") as f:
            expected = f.read()
        self.assertEqual(emit_lp_text(build_golden_model()), expected)

    def test_deterministic(self):
        self.assertEqual(emit_lp_text(build_golden_model()), emit_lp_text(build_golden_model()))

    def test_empty_model(self):
        EXPECTED_LINES = [
            "\\* Problem: empty *\\",
            "Minimize",
            " obj: 0 __dummy",
            "Subject To",
            "Bounds",
            " __dummy = 0",
            "End",
        ]
        self.assertEqual(emit_lp_text(MipModel("empty")), "\n".join(EXPECTED_LINES) + "\n")

    def test_bound_forms(self):
        model = MipModel("bounds")
        model.add_var("a")
        model.add_var("c", lb=-math.inf, ub=2.0)
        fixed = model.add_var("f", lb=0.0, ub=9.0)
        model.fix(fixed, 3.0)
        model.add_var("h", kind="binary", lb=1.0, ub=1.0)
        text = emit_lp_text(model)
        self.assertIn(" 0 <= a <= +inf\n", text)
        self.assertIn(" -inf <= c <= 2\n", text)
        self.assertIn(" f = 3\n", text)
        self.assertIn(" h = 1\n", text)
        self.assertIn("Binaries\n h\n", text)

    def test_empty_row(self):
        model = MipModel("row")
        x = model.add_var("x", ub=1.0)
        model.set_objective(x)
        model.add_constraint(x - x, "<=", 1.0, label="trivial")
        text = emit_lp_text(model)
        self.assertIn(" trivial: 0 __dummy <= 1\n", text)
        self.assertIn(" __dummy = 0\n", text)

    def test_precision(self):
        model = MipModel("precision")
        x = model.add_var("x", ub=1.0)
        model.add_constraint(x * (1.0 / 3.0), "<=", 0.1, label="third")
        self.assertIn(" third: 0.333333333333333 x <= 0.1\n", emit_lp_text(model))

    def test_write(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = write_lp(build_golden_model(), os.path.join(tmp_dir, "model.lp"))
            with open(path, encoding="utf-8") as f:
                written = f.read()
            with open(GOLDEN_LP, encoding="utf-8") as f:
                self.assertEqual(written, f.read())
