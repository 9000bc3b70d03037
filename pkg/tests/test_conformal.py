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
import warnings
from fractions import Fraction

import numpy as np

from comicl.conformal import (
    Calibration,
    calibrate_classification,
    calibrate_regression,
    classification_scores,
    conformal_quantile,
    coverage_eval,
    default_big_m,
    marginal_calibrate,
    mondrian_calibrate,
    regression_scores,
    score_classification,
    score_regression,
)
from comicl.data import OutcomeSet, synth_regression
from comicl.models import Mlp


def brute_force_quantile(scores, alpha):
    """Smallest t with at least ceil((1 - alpha)(N + 1)) scores <= t."""
    n = len(scores)
    k = math.ceil((1 - Fraction(str(alpha))) * (n + 1))
    if k > n:
        return math.inf
    for t in sorted(set(scores)):
        if sum(1 for s in scores if s <= t) >= k:
            return t
    return math.inf


class ScoreTester(unittest.TestCase):
    """
    Testing suite for conformal scores
    """

    def test_regression_score(self):
        self.assertEqual(score_regression(5.0, 2.0, 3.0), 1.0)
        self.assertEqual(score_regression(4.0, 0.5, 4.0), 0.0)
        self.assertAlmostEqual(score_regression(5.0, 0.001, 4.0), 1000.0)
        with self.assertRaises(ValueError):
            score_regression(5.0, 1e-4, 4.0)

    def test_classification_score(self):
        self.assertEqual(score_classification([2.0, -1.0, 0.5], 0), -2.0)
        self.assertEqual(score_classification([0.0, 0.0, 0.0], 1), 0.0)
        # one-hot form: -sum_k y_k h_k with y = e_1
        one_hot = np.array([0.0, 1.0, 0.0])
        self.assertEqual(score_classification([2.0, -1.0, 0.5], 1), -float(one_hot @ np.array([2.0, -1.0, 0.5])))
        with self.assertRaises(ValueError):
            score_classification([1.0, 2.0], 2)

    def test_vectorized(self):
        np.testing.assert_array_equal(regression_scores([5.0, 1.0], [2.0, 1.0], [3.0, 1.0]), [1.0, 0.0])
        np.testing.assert_array_equal(classification_scores([[2.0, -1.0], [0.5, 3.0]], [0, 1]), [-2.0, -3.0])
        with self.assertRaises(ValueError):
            regression_scores([1.0], [0.0], [1.0])


class QuantileTester(unittest.TestCase):
    """
    Testing suite for the finite-sample conformal quantile
    """

    def test_examples(self):
        EXPECTED_QUANTILES = [
            (list(range(1, 20)), 0.1, 18.0),
            ([5.0], 0.1, math.inf),
            ([3.0, 1.0, 2.0], 0.5, 2.0),
            (list(range(1, 200)), 0.1, 180.0),
            ([1.0], 0.5, math.inf),
        ]
        for scores, alpha, expected in EXPECTED_QUANTILES:
            self.assertEqual(conformal_quantile(scores, alpha), expected)

    def test_errors(self):
        with self.assertRaises(ValueError):
            conformal_quantile([], 0.1)
        with self.assertRaises(ValueError):
            conformal_quantile([1.0], 1.0)

    def test_brute_force(self):
        r"""
        Test the quantile against a rank oracle on every multiset of up to 8 values from 1..8
        """
        for alpha in (0.05, 0.1, 0.2, 0.5, 0.9):
            for n in range(1, 9):
                for scores in itertools.combinations_with_replacement(range(1, 9), n):
                    expected = brute_force_quantile(scores, alpha)
                    self.assertEqual(conformal_quantile(list(scores), alpha), expected, msg=f"{scores} {alpha}")

    def test_order_invariant(self):
        scores = np.random.default_rng(0).normal(size=30)
        permuted = np.random.default_rng(1).permutation(scores)
        self.assertEqual(conformal_quantile(scores, 0.1), conformal_quantile(permuted, 0.1))

    def test_monotone_in_alpha(self):
        scores = np.random.default_rng(2).exponential(size=100)
        alphas = [0.01, 0.05, 0.1, 0.2, 0.5]
        quantiles = [conformal_quantile(scores, alpha) for alpha in alphas]
        for smaller_alpha, larger_alpha in zip(quantiles, quantiles[1:]):
            self.assertGreaterEqual(smaller_alpha, larger_alpha)


class CalibrationTester(unittest.TestCase):
    """
    Testing suite for marginal and Mondrian calibration
    """

    def test_marginal(self):
        calibration = marginal_calibrate(list(range(1, 20)), 0.1)
        self.assertEqual(calibration.q_hat, 18.0)
        self.assertEqual(calibration.n_cal, 19)
        self.assertFalse(calibration.is_mondrian)
        self.assertEqual(calibration.quantile_for(), 18.0)

    def test_infinite_warns(self):
        with self.assertWarns(UserWarning):
            calibration = marginal_calibrate([5.0], 0.1)
        self.assertTrue(math.isinf(calibration.q_hat))

    def test_mondrian_groups(self):
        scores = list(range(1, 11))
        groups = [0] * 9 + [1]
        with self.assertWarns(UserWarning):
            calibration = mondrian_calibrate(scores, groups, 0.1)
        self.assertEqual(calibration.mondrian_q[0], (9.0, 9))
        self.assertTrue(math.isinf(calibration.mondrian_q[1][0]))
        self.assertEqual(calibration.encoder_quantile(), 9.0)
        self.assertTrue(math.isinf(calibration.desired_quantile()))
        with self.assertRaises(ValueError):
            calibration.quantile_for(2)

    def test_mondrian_missing_group(self):
        EXPECTED_GROUPS = [([1] * 30, 0), ([0] * 30, 1)]
        for groups, missing in EXPECTED_GROUPS:
            with self.assertWarns(UserWarning):
                calibration = mondrian_calibrate([0.1, 0.2, 0.3] * 10, groups, 0.1)
            self.assertEqual(calibration.mondrian_q[1 - missing], (0.3, 30))
            self.assertEqual(calibration.mondrian_q[missing][1], 0)
            self.assertTrue(math.isinf(calibration.quantile_for(missing)))
        self.assertTrue(math.isinf(calibration.desired_quantile()))
        self.assertEqual(calibration.encoder_quantile(), 0.3)

    def test_mondrian_single_group(self):
        scores = np.random.default_rng(0).normal(size=40)
        calibration = mondrian_calibrate(scores, np.zeros(40), 0.1)
        self.assertEqual(calibration.mondrian_q[0][0], conformal_quantile(scores, 0.1))

    def test_mondrian_permutation(self):
        rng = np.random.default_rng(3)
        scores, groups = rng.normal(size=60), rng.integers(0, 2, size=60)
        order = rng.permutation(60)
        first = mondrian_calibrate(scores, groups, 0.2)
        second = mondrian_calibrate(scores[order], groups[order], 0.2)
        self.assertEqual(first.mondrian_q, second.mondrian_q)

    def test_mondrian_length_mismatch(self):
        with self.assertRaises(ValueError):
            mondrian_calibrate([1.0, 2.0], [0], 0.1)

    def test_serialization(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            calibration = mondrian_calibrate(list(range(1, 11)), [0] * 9 + [1], 0.1)
        restored = Calibration.from_dict(calibration.to_dict())
        self.assertEqual(restored.mondrian_q[0], (9.0, 9))
        self.assertTrue(math.isinf(restored.mondrian_q[1][0]))
        self.assertEqual(restored.q_hat, calibration.q_hat)
        self.assertEqual(restored.score_kind, "normalized-residual")

    def test_calibrate_regression(self):
        class Fixed:
            def __init__(self, values):
                self.values = np.asarray(values, dtype=np.float64)

            def predict(self, X):
                return self.values

        calibration = calibrate_regression(Fixed([5.0, 5.0, 5.0]), Fixed([2.0, 1.0, 1.0]), None, [3.0, 4.0, 7.0], 0.5)
        # scores 1, 1, 2 -> k = 2
        self.assertEqual(calibration.q_hat, 1.0)
        self.assertEqual(calibration.task, "regression")

    def test_calibrate_classification(self):
        network = Mlp([np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])], [np.zeros(3)], task="classification")
        X = np.array([[1.0, 0.0], [0.0, 3.0], [0.5, 0.5]])
        calibration = calibrate_classification(network, X, [0, 1, 2], 0.5)
        # scores -1, -3, 1 -> k = 2
        self.assertEqual(calibration.q_hat, -1.0)
        self.assertEqual(calibration.max_abs_logit, 3.0)
        self.assertEqual(calibration.task, "classification")

    def test_default_big_m(self):
        self.assertEqual(default_big_m(3.0), 12.0)
        self.assertEqual(default_big_m(-3.0, safety=2.0), 6.0)
        with self.assertRaises(ValueError):
            default_big_m(math.inf)


class CoverageTester(unittest.TestCase):
    """
    Testing suite for empirical coverage
    """

    def test_trivial(self):
        calibration = marginal_calibrate([1.0, 2.0, 3.0, 4.0], 0.5)
        self.assertEqual(coverage_eval(calibration, [0.0, 0.5, 1.0]).overall, 1.0)
        calibration = Calibration(alpha=0.1, n_cal=1, score_kind="normalized-residual", q_hat=math.inf)
        self.assertEqual(coverage_eval(calibration, [1e9, 5.0]).overall, 1.0)

    def test_groups_and_strata(self):
        calibration = marginal_calibrate([1.0, 2.0, 3.0, 4.0], 0.5)
        report = coverage_eval(
            calibration, [1.0, 5.0, 2.0, 6.0], test_groups=[0, 0, 1, 1], strata=["a", "b", "a", "b"]
        )
        self.assertEqual(report.overall, 0.5)
        self.assertEqual(report.groups, {0: (0.5, 2), 1: (0.5, 2)})
        self.assertEqual(report.strata, {"a": (1.0, 2), "b": (0.0, 2)})
        self.assertEqual(next(report.rows()), ("overall", "all", 4, 0.5))

    def test_mondrian_errors(self):
        calibration = mondrian_calibrate([1.0, 2.0, 3.0, 4.0], [0, 0, 0, 0], 0.5)
        with self.assertRaises(ValueError):
            coverage_eval(calibration, [1.0])
        with self.assertRaisesRegex(ValueError, "absent"):
            coverage_eval(calibration, [1.0, 2.0], test_groups=[0, 2])
        with self.assertRaises(ValueError):
            coverage_eval(calibration, [])


def _noisy_scores(seed, n):
    """Normalized residuals of a fixed heteroscedastic predictor on fresh oracle samples."""
    dataset, oracle = synth_regression(n, seed=seed, noise_sigma=0.5)
    h_pred = 0.9 * oracle.evaluate(dataset.features) + 2.0
    u_pred = 1.0 + dataset.features[:, 0]
    return regression_scores(h_pred, u_pred, dataset.targets), dataset.targets


class MonteCarloCoverageTester(unittest.TestCase):
    r"""
    Empirical coverage of split conformal calibration on exchangeable synthetic data
    """

    def test_single_draw(self):
        scores, _ = _noisy_scores(0, 1200)
        calibration = marginal_calibrate(scores[:200], 0.1)
        self.assertGreaterEqual(coverage_eval(calibration, scores[200:]).overall, 0.82)

    def test_marginal_average(self):
        for alpha in (0.05, 0.1):
            coverages = []
            for seed in range(20):
                scores, _ = _noisy_scores(seed, 1200)
                calibration = marginal_calibrate(scores[:200], alpha)
                coverages.append(coverage_eval(calibration, scores[200:]).overall)
            self.assertGreaterEqual(np.mean(coverages), 1 - alpha - 0.03)

    def test_mondrian_average(self):
        r"""
        Both feasibility groups reach the target coverage on average
        """
        outcome = OutcomeSet.interval(50.0, 100.0)
        alpha = 0.1
        per_group = {0: [], 1: []}
        for seed in range(20):
            scores, targets = _noisy_scores(100 + seed, 1200)
            groups = np.array([int(outcome.contains(y)) for y in targets])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                calibration = mondrian_calibrate(scores[:200], groups[:200], alpha)
            test_scores, test_groups = scores[200:], groups[200:]
            report = coverage_eval(calibration, test_scores, test_groups=test_groups)
            for group, (coverage, _) in report.groups.items():
                per_group[group].append(coverage)
        for group, coverages in per_group.items():
            self.assertGreaterEqual(np.mean(coverages), 1 - alpha - 0.05, msg=f"group {group}")
