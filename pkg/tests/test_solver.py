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
import itertools
import math
import unittest

import numpy as np

from comicl.core import NumericalBreakdownError
from comicl.mip import MipModel
from comicl.solver import SOLVED_STATUSES, LinearProgram, branch_and_bound, relative_gap, simplex_solve


KNAPSACK_VALUES = [10.0, 13.0, 7.0, 8.0, 9.0, 4.0, 6.0, 11.0]
KNAPSACK_WEIGHTS = [5.0, 7.0, 3.0, 4.0, 6.0, 2.0, 3.0, 8.0]
KNAPSACK_CAPACITY = 20.0


def _lp(c, A, senses, b, lb, ub, c0=0.0):
    return LinearProgram(
        c=np.array(c, dtype=np.float64),
        A=np.array(A, dtype=np.float64, ndmin=2),
        senses=np.array(senses, dtype=np.int64),
        b=np.array(b, dtype=np.float64),
        lb=np.array(lb, dtype=np.float64),
        ub=np.array(ub, dtype=np.float64),
        c0=c0,
    )


def knapsack_model():
    model = MipModel("knapsack")
    items = [model.add_var(f"item{i}", kind="binary") for i in range(len(KNAPSACK_VALUES))]
    model.add_constraint(sum(w * v for w, v in zip(KNAPSACK_WEIGHTS, items)), "<=", KNAPSACK_CAPACITY, "capacity")
    model.set_objective(sum(-value * v for value, v in zip(KNAPSACK_VALUES, items)))
    return model


def enumerate_binary(c, A, senses, b):
    """Best objective over all 0/1 assignments, `None` when none is feasible."""
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(c)):
        x = np.array(bits)
        lhs = A @ x
        feasible = all(
            (s < 0 and l <= r + 1e-9) or (s > 0 and l >= r - 1e-9) or (s == 0 and abs(l - r) <= 1e-9)
            for l, s, r in zip(lhs, senses, b)
        )
        if feasible and (best is None or c @ x < best):
            best = float(c @ x)
    return best


class SimplexTester(unittest.TestCase):
    """
    Testing suite for the two-phase simplex LP solver
    """

    def test_textbook(self):
        lp = _lp([-3, -5], [[1, 0], [0, 2], [3, 2]], [-1, -1, -1], [4, 12, 18], [0, 0], [math.inf, math.inf])
        solution = simplex_solve(lp)
        self.assertEqual(solution.status, "optimal")
        self.assertAlmostEqual(solution.objective, -36.0)
        np.testing.assert_allclose(solution.x, [2.0, 6.0], atol=1e-9)

    def test_upper_bounds_and_offset(self):
        lp = _lp([-1, -1], [[1, 1]], [-1], [4], [0, 0], [3, math.inf], c0=10.0)
        solution = simplex_solve(lp)
        self.assertEqual(solution.status, "optimal")
        self.assertAlmostEqual(solution.objective, 6.0)

    def test_free_and_negative_bounds(self):
        lp = _lp([1, 0], [[1, 1]], [0], [2], [-math.inf, -1], [math.inf, 5])
        solution = simplex_solve(lp)
        self.assertEqual(solution.status, "optimal")
        np.testing.assert_allclose(solution.x, [-3.0, 5.0], atol=1e-9)

        lp = _lp([1], np.zeros((0, 1)), [], [], [-2], [5], c0=1.0)
        solution = simplex_solve(lp)
        self.assertAlmostEqual(solution.objective, -1.0)

    def test_greater_equal(self):
        lp = _lp([2, 3], [[1, 1], [1, -1]], [1, 1], [4, -2], [0, 0], [math.inf, math.inf])
        solution = simplex_solve(lp)
        self.assertEqual(solution.status, "optimal")
        # x + y >= 4 and y <= x + 2 -> cheapest at x = 4, y = 0
        self.assertAlmostEqual(solution.objective, 8.0)

    def test_infeasible(self):
        lp = _lp([1, 1], [[1, 1]], [1], [5], [0, 0], [1, 1])
        self.assertEqual(simplex_solve(lp).status, "infeasible")
        lp = _lp([1], [[0]], [0], [1], [0], [1])
        self.assertEqual(simplex_solve(lp).status, "infeasible")
        lp = _lp([1], [[1]], [-1], [1], [2], [1])
        self.assertEqual(simplex_solve(lp).status, "infeasible")

    def test_unbounded(self):
        lp = _lp([-1, 0], [[1, -1]], [-1], [1], [0, 0], [math.inf, math.inf])
        solution = simplex_solve(lp)
        self.assertEqual(solution.status, "unbounded")
        self.assertEqual(solution.objective, -math.inf)

    def test_pivot_limit(self):
        lp = _lp([-3, -5], [[1, 0], [0, 2], [3, 2]], [-1, -1, -1], [4, 12, 18], [0, 0], [math.inf, math.inf])
        with self.assertRaises(NumericalBreakdownError) as context:
            simplex_solve(lp, max_pivots=0)
        self.assertEqual(context.exception.pivots, 1)

    def test_non_finite(self):
        lp = _lp([math.nan], [[1]], [-1], [1], [0], [1])
        with self.assertRaises(ValueError):
            simplex_solve(lp)

    def test_from_model(self):
        model = knapsack_model()
        lp = LinearProgram.from_model(model)
        solution = simplex_solve(lp)
        self.assertEqual(solution.status, "optimal")
        # greedy fractional relaxation by value density
        self.assertAlmostEqual(solution.objective, -(7 + 10 + 8 + 4 + 6 + 13 * 3 / 7))


class BranchAndBoundTester(unittest.TestCase):
    """
    Testing suite for the branch-and-bound MILP solver
    """

    def test_root_integral(self):
        model = MipModel("root")
        x = model.add_var("x", kind="integer", ub=5.0)
        y = model.add_var("y", kind="integer", ub=5.0)
        model.add_constraint(x + y, ">=", 2.0)
        model.set_objective(x + y)
        result = branch_and_bound(model)
        self.assertEqual(result.status, "optimal")
        self.assertEqual(result.nodes, 1)
        self.assertAlmostEqual(result.objective, 2.0)
        self.assertEqual(result.gap, 0.0)

    def test_knapsack(self):
        result = branch_and_bound(knapsack_model(), rel_gap=0.0, time_limit=600.0)
        expected = enumerate_binary(
            -np.array(KNAPSACK_VALUES), np.array([KNAPSACK_WEIGHTS]), [-1], [KNAPSACK_CAPACITY]
        )
        self.assertIn(result.status, SOLVED_STATUSES)
        self.assertAlmostEqual(result.objective, expected)
        self.assertTrue(knapsack_model().check_feasible(result.x))
        self.assertLessEqual(result.bound, result.objective + 1e-9)

    def test_random_binary_programs(self):
        r"""
        Test exact optimality against full enumeration on random pure 0/1 programs
        """
        rng = np.random.default_rng(0)
        for trial in range(20):
            n = int(rng.integers(4, 13))
            m = int(rng.integers(1, 4))
            c = rng.integers(-10, 11, size=n).astype(np.float64)
            A = rng.integers(-5, 11, size=(m, n)).astype(np.float64)
            senses = rng.choice([-1, 1], size=m)
            b = np.where(senses < 0, np.floor(A.sum(axis=1) / 2), np.ceil(A.sum(axis=1) / 3)).astype(np.float64)

            model = MipModel(f"random{trial}")
            xs = [model.add_var(kind="binary") for _ in range(n)]
            for row, sense, rhs in zip(A, senses, b):
                model.add_constraint(sum(float(a) * v for a, v in zip(row, xs)), "<=" if sense < 0 else ">=", rhs)
            model.set_objective(sum(float(w) * v for w, v in zip(c, xs)))

            result = branch_and_bound(model, rel_gap=0.0, time_limit=600.0)
            expected = enumerate_binary(c, A, senses, b)
            if expected is None:
                self.assertEqual(result.status, "infeasible", msg=f"trial {trial}")
            else:
                self.assertIn(result.status, SOLVED_STATUSES, msg=f"trial {trial}")
                self.assertAlmostEqual(result.objective, expected, msg=f"trial {trial}")
                self.assertTrue(model.check_feasible(result.x))

    def test_infeasible_root(self):
        model = MipModel("infeasible")
        x = model.add_var("x", kind="binary")
        y = model.add_var("y", kind="binary")
        model.add_constraint(x + y, ">=", 5.0)
        result = branch_and_bound(model)
        self.assertEqual(result.status, "infeasible")
        self.assertEqual(result.nodes, 1)
        self.assertIsNone(result.x)
        self.assertEqual(result.bound, math.inf)
        self.assertEqual(result.gap, math.inf)
        with self.assertRaises(ValueError):
            result.value(x)

    def test_infeasible_after_branching(self):
        model = MipModel("parity")
        x = model.add_var("x", kind="binary")
        model.add_constraint(2 * x, "==", 1.0)
        result = branch_and_bound(model)
        self.assertEqual(result.status, "infeasible")
        self.assertEqual(result.nodes, 3)

    def test_unbounded(self):
        model = MipModel("unbounded")
        x = model.add_var("x", kind="integer")
        model.set_objective(-1 * x)
        result = branch_and_bound(model)
        self.assertEqual(result.status, "unbounded")
        self.assertEqual(result.bound, -math.inf)

    def test_deterministic(self):
        first = branch_and_bound(knapsack_model(), rel_gap=0.0)
        second = branch_and_bound(knapsack_model(), rel_gap=0.0)
        np.testing.assert_array_equal(first.x, second.x)
        self.assertEqual(first.nodes, second.nodes)
        self.assertEqual(first.status, second.status)

    def test_node_callback(self):
        events = []
        result = branch_and_bound(knapsack_model(), rel_gap=0.0, node_callback=events.append)
        self.assertGreaterEqual(len(events), 1)
        for event in events:
            self.assertEqual(set(event), {"node", "incumbent", "bound", "gap", "elapsed"})
            self.assertLessEqual(event["bound"], event["incumbent"] + 1e-9)
        incumbents = [event["incumbent"] for event in events]
        self.assertEqual(incumbents, sorted(incumbents, reverse=True))
        self.assertEqual(len(set(incumbents)), len(incumbents))
        self.assertAlmostEqual(incumbents[-1], result.objective)

    def test_node_limit(self):
        result = branch_and_bound(knapsack_model(), node_limit=1)
        self.assertEqual(result.status, "node-limit")
        self.assertEqual(result.nodes, 1)
        self.assertIsNone(result.x)
        optimum = enumerate_binary(-np.array(KNAPSACK_VALUES), np.array([KNAPSACK_WEIGHTS]), [-1], [KNAPSACK_CAPACITY])
        self.assertLessEqual(result.bound, optimum)

    def test_model_untouched(self):
        model = knapsack_model()
        before = [(v.lb, v.ub) for v in model.variables]
        branch_and_bound(model, rel_gap=0.0)
        self.assertEqual([(v.lb, v.ub) for v in model.variables], before)

    def test_argument_errors(self):
        model = knapsack_model()
        with self.assertRaises(ValueError):
            branch_and_bound(model, rel_gap=-0.1)
        with self.assertRaises(ValueError):
            branch_and_bound(model, node_limit=0)
        with self.assertRaises(ValueError):
            branch_and_bound(model, time_limit=0.0)

    def test_relative_gap(self):
        self.assertAlmostEqual(relative_gap(10.0, 9.0), 0.1)
        self.assertEqual(relative_gap(None, 0.0), math.inf)
        self.assertEqual(relative_gap(0.0, 0.0), 0.0)
        self.assertEqual(relative_gap(5.0, 6.0), 0.0)

    def test_to_dict(self):
        payload = branch_and_bound(knapsack_model(), rel_gap=0.0).to_dict()
        self.assertEqual(set(payload), {"status", "objective", "bound", "gap", "nodes", "seconds", "x"})
        self.assertEqual(len(payload["x"]), len(KNAPSACK_VALUES))
