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
import unittest
import warnings

import numpy as np

from comicl.conformal import Calibration, mondrian_calibrate
from comicl.core import U_FLOOR, CalibrationInfeasibleError
from comicl.data import OutcomeSet, synth_regression
from comicl.encoders import (
    ProblemSpec,
    add_classification_conformal,
    add_regression_conformal,
    argmax_big_m,
    build_cmicl,
    build_micl,
    build_wmicl,
    encode_mlp,
    encode_predictor,
    encode_tree_ensemble,
    interval_affine,
    propagate_bounds,
    required_big_m,
    wmicl_threshold,
)
from comicl.mip import MipModel
from comicl.models import (
    Ensemble,
    Mlp,
    PredictorWrapper,
    Tree,
    UncertaintyModel,
    fit_forest,
    fit_gbt,
    fit_lmdt,
    fit_tree,
)
from comicl.solver import SOLVED_STATUSES, branch_and_bound


def random_mlp(seed, sizes=(3, 6, 6, 1), task="regression"):
    rng = np.random.default_rng(seed)
    weights = [rng.normal(size=(n_out, n_in)) for n_in, n_out in zip(sizes, sizes[1:])]
    biases = [0.3 * rng.normal(size=n_out) for n_out in sizes[1:]]
    return Mlp(weights, biases, task=task)


def relu_difference(sign=1.0):
    # relu(sign * (x0 - x1)) followed by an identity output
    return Mlp([np.array([[sign, -sign]]), np.array([[1.0]])], [np.zeros(1), np.zeros(1)])


def shifted_difference(shift):
    # relu(x0 - x1 + shift) followed by an identity output
    return Mlp([np.array([[1.0, -1.0]]), np.array([[1.0]])], [np.array([shift]), np.zeros(1)])


def constant_uncertainty(value=1.0):
    return UncertaintyModel(Mlp([np.zeros((1, 2))], [np.array([value])]))


def toy_problem(outcome=None):
    return ProblemSpec(
        name="toy",
        costs=[1.0, 1.0],
        lower=[0.0, 0.0],
        upper=[1.0, 1.0],
        feature_names=["a", "b"],
        outcome=outcome or OutcomeSet.interval(0.5, math.inf),
    )


def solve(model, objective=0.0):
    model.set_objective(objective)
    return branch_and_bound(model, rel_gap=0.0, time_limit=600.0)


def box_model(n, lower=0.0, upper=1.0):
    model = MipModel("box")
    return model, [model.add_var(f"x{i}", lb=lower, ub=upper) for i in range(n)]


class BoundsTester(unittest.TestCase):
    """
    Testing suite for interval bound propagation
    """

    def test_interval_affine(self):
        lower, upper = interval_affine(np.array([[1.0, -2.0]]), np.array([0.5]), np.zeros(2), np.ones(2))
        np.testing.assert_allclose(lower, [-1.5])
        np.testing.assert_allclose(upper, [1.5])

    def test_single_neuron(self):
        bounds = propagate_bounds(relu_difference(), np.zeros(2), np.ones(2))
        np.testing.assert_allclose(bounds.layers[0][0], [-1.0])
        np.testing.assert_allclose(bounds.layers[0][1], [1.0])
        np.testing.assert_allclose(bounds.output[0], [0.0])
        np.testing.assert_allclose(bounds.output[1], [1.0])
        self.assertEqual(bounds.n_unstable, 1)

    def test_dead_neuron(self):
        network = Mlp([np.array([[-1.0, -1.0]]), np.array([[1.0]])], [np.array([-0.5]), np.zeros(1)])
        bounds = propagate_bounds(network, np.zeros(2), np.ones(2))
        np.testing.assert_allclose(bounds.layers[0][0], [-2.5])
        np.testing.assert_allclose(bounds.layers[0][1], [-0.5])
        np.testing.assert_allclose(bounds.output, ([0.0], [0.0]))
        self.assertEqual(bounds.n_unstable, 0)

    def test_sound(self):
        r"""
        Test that sampled pre-activations never leave the propagated intervals
        """
        for seed in range(5):
            network = random_mlp(seed, sizes=(4, 8, 8, 2), task="classification")
            bounds = propagate_bounds(network, -np.ones(4), 2 * np.ones(4))
            hidden = np.random.default_rng(seed).uniform(-1.0, 2.0, size=(1000, 4))
            for layer, (weight, bias) in enumerate(network.layers):
                pre = hidden @ weight.T + bias
                lower, upper = bounds.layers[layer]
                self.assertTrue(np.all(pre >= lower - 1e-9))
                self.assertTrue(np.all(pre <= upper + 1e-9))
                hidden = np.maximum(pre, 0.0)

    def test_errors(self):
        network = relu_difference()
        with self.assertRaisesRegex(ValueError, "unbounded"):
            propagate_bounds(network, np.zeros(2), np.array([1.0, math.inf]))
        with self.assertRaises(ValueError):
            propagate_bounds(network, np.ones(2), np.zeros(2))
        with self.assertRaises(ValueError):
            propagate_bounds(network, np.zeros(3), np.ones(3))


class NeuralEncodingTester(unittest.TestCase):
    """
    Testing suite for the big-M encoding of ReLU networks
    """

    def test_single_neuron(self):
        model, xs = box_model(2)
        encoded = encode_mlp(model, relu_difference(), xs)
        self.assertEqual(len(encoded.binaries), 1)
        self.assertEqual(model.variables[encoded.binaries[0].index].name, "nn_d0_0")
        for suffix in ("ge", "on", "off"):
            model.constraint(f"nn_a0_0_{suffix}")
        model.constraint("nn_out0")

        result = solve(model, -1.0 * encoded.output)
        self.assertIn(result.status, SOLVED_STATUSES)
        self.assertAlmostEqual(result.objective, -1.0, places=6)
        np.testing.assert_allclose(result.values(xs), [1.0, 0.0], atol=1e-6)

        result = solve(model, encoded.output)
        self.assertAlmostEqual(result.objective, 0.0, places=6)

    def test_dead_and_active_neurons(self):
        model, xs = box_model(2)
        dead = Mlp([np.array([[-1.0, -1.0]]), np.array([[1.0]])], [np.array([-0.5]), np.zeros(1)])
        encoded = encode_mlp(model, dead, xs, prefix="dead")
        self.assertEqual(encoded.binaries, [])
        activation = model.variables[model.var("dead_a0_0").index]
        self.assertEqual((activation.lb, activation.ub), (0.0, 0.0))

        active = Mlp([np.array([[1.0, 1.0]]), np.array([[1.0]])], [np.array([0.5]), np.zeros(1)])
        encoded = encode_mlp(model, active, xs, prefix="active")
        self.assertEqual(encoded.binaries, [])
        model.constraint("active_a0_0_eq")
        result = solve(model, -1.0 * encoded.output)
        self.assertAlmostEqual(result.objective, -2.5, places=6)

    def test_input_mismatch(self):
        model, xs = box_model(3)
        with self.assertRaises(ValueError):
            encode_mlp(model, relu_difference(), xs)

    def test_output_property(self):
        model, xs = box_model(3)
        encoded = encode_mlp(model, random_mlp(0, sizes=(3, 4, 2), task="classification"), xs)
        self.assertEqual(len(encoded.outputs), 2)
        with self.assertRaises(ValueError):
            encoded.output


class EncodingEquivalenceTester:
    """
    Mixin: with the inputs pinned to a point, the encoded output can only take the predictor's value there
    """

    n_features = 5
    n_points = 50
    check_maximum = True

    def build_predictor(self):
        raise NotImplementedError

    def test_matches_predictor(self):
        predictor = self.build_predictor()
        model, xs = box_model(self.n_features)
        encoded = encode_predictor(model, predictor, xs, prefix="p")
        points = np.random.default_rng(7).uniform(size=(self.n_points, self.n_features))
        expected = predictor.predict(points)
        for point, value in zip(points, expected):
            for var, coordinate in zip(xs, point):
                model.fix(var, float(coordinate))
            result = solve(model, encoded.outputs[0])
            self.assertIn(result.status, SOLVED_STATUSES)
            value = np.atleast_1d(value)
            np.testing.assert_allclose(result.values(encoded.outputs), value, rtol=0, atol=1e-6)
            if self.check_maximum:
                result = solve(model, -1.0 * encoded.outputs[0])
                self.assertAlmostEqual(-result.objective, float(value[0]), delta=1e-6)


class MlpEquivalenceTester(EncodingEquivalenceTester, unittest.TestCase):
    n_features = 3

    def build_predictor(self):
        return random_mlp(11)


class MlpClassificationEquivalenceTester(EncodingEquivalenceTester, unittest.TestCase):
    n_features = 3
    check_maximum = False

    def build_predictor(self):
        return random_mlp(12, sizes=(3, 6, 3), task="classification")


class UncertaintyEquivalenceTester(EncodingEquivalenceTester, unittest.TestCase):
    n_features = 3

    def build_predictor(self):
        return UncertaintyModel(random_mlp(13, sizes=(3, 5, 1)), u_floor=0.05)


class CartEquivalenceTester(EncodingEquivalenceTester, unittest.TestCase):
    def build_predictor(self):
        return Ensemble.from_tree(fit_tree(synth_regression(200, seed=0)[0], max_depth=3))


class LmdtEquivalenceTester(EncodingEquivalenceTester, unittest.TestCase):
    def build_predictor(self):
        return fit_lmdt(synth_regression(200, seed=1)[0], max_depth=2)


class ForestEquivalenceTester(EncodingEquivalenceTester, unittest.TestCase):
    check_maximum = False

    def build_predictor(self):
        return fit_forest(synth_regression(200, seed=2)[0], n_trees=3, max_depth=3)


class GbtEquivalenceTester(EncodingEquivalenceTester, unittest.TestCase):
    check_maximum = False

    def build_predictor(self):
        return fit_gbt(synth_regression(200, seed=3)[0], n_estimators=3, max_depth=2)


class TreeEncodingTester(unittest.TestCase):
    """
    Testing suite for the leaf-selection encoding of tree ensembles
    """

    def setUp(self):
        self.tree = Tree([0, -1, -1], [0.5, 0.0, 0.0], [1, -1, -1], [2, -1, -1], [0.0, 2.0, 7.0], n_features=1)

    def test_shared_splits(self):
        model, xs = box_model(1)
        encoded = encode_tree_ensemble(model, Ensemble([self.tree, self.tree], "average"), xs)
        # one split binary shared by both trees plus two leaves per tree
        self.assertEqual(len(encoded.binaries), 5)
        for label in ("tree_le0_0", "tree_gt0_0", "tree_one0", "tree_one1", "tree_l0_0", "tree_r1_0"):
            model.constraint(label)

    def test_branches(self):
        EXPECTED_OUTPUTS = [(0.3, 2.0), (0.5, 2.0), (0.7, 7.0), (1.0, 7.0)]
        model, xs = box_model(1)
        encoded = encode_tree_ensemble(model, Ensemble.from_tree(self.tree), xs)
        for x, expected in EXPECTED_OUTPUTS:
            model.fix(xs[0], x)
            result = solve(model, encoded.output)
            self.assertAlmostEqual(result.objective, expected, places=6)
            result = solve(model, -1.0 * encoded.output)
            self.assertAlmostEqual(-result.objective, expected, places=6)

    def test_split_gap(self):
        model, xs = box_model(1)
        encode_tree_ensemble(model, Ensemble.from_tree(self.tree), xs, eps=1e-3)
        model.fix(xs[0], 0.5005)
        self.assertEqual(solve(model).status, "infeasible")

    def test_constant_tree(self):
        model, xs = box_model(1)
        encoded = encode_tree_ensemble(model, Ensemble.from_tree(Tree.leaf(3.0, n_features=1)), xs)
        self.assertEqual(encoded.binaries, [])
        self.assertEqual(encoded.output_bounds, [(3.0, 3.0)])

    def test_errors(self):
        model, xs = box_model(1, upper=math.inf)
        with self.assertRaisesRegex(ValueError, "finite bounds"):
            encode_tree_ensemble(model, Ensemble.from_tree(self.tree), xs)
        model, xs = box_model(2)
        with self.assertRaises(ValueError):
            encode_tree_ensemble(model, Ensemble.from_tree(self.tree), xs)
        model, xs = box_model(1)
        with self.assertRaises(ValueError):
            encode_tree_ensemble(model, Ensemble.from_tree(self.tree), xs, eps=0.0)

    def test_unknown_predictor(self):
        class Opaque(PredictorWrapper):
            model_type = None

            @property
            def n_features(self):
                return 1

        model, xs = box_model(1)
        with self.assertRaisesRegex(ValueError, "no encoding"):
            encode_predictor(model, Opaque(), xs, prefix="p")


class ConformalRowsTester(unittest.TestCase):
    """
    Testing suite for the conformal set constraints
    """

    def _regression_model(self):
        model = MipModel("interval")
        y = model.add_var("y", lb=0.0, ub=200.0)
        u = model.add_var("u", lb=U_FLOOR, ub=100.0)
        return model, y, u

    def test_regression_interval(self):
        model, y, u = self._regression_model()
        add_regression_conformal(model, y, u, 2.0, OutcomeSet.interval(50.0, 100.0))
        model.fix(u, 1.0)
        self.assertAlmostEqual(solve(model, y).objective, 52.0)
        self.assertAlmostEqual(-solve(model, -1.0 * y).objective, 98.0)

    def test_regression_half_line(self):
        model, y, u = self._regression_model()
        added = add_regression_conformal(model, y, u, 2.0, OutcomeSet.interval(50.0, math.inf))
        self.assertEqual(len(added), 1)
        self.assertEqual(model.constraints[added[0]].label, "conformal_lower")

    def test_regression_errors(self):
        model, y, u = self._regression_model()
        with self.assertRaises(CalibrationInfeasibleError):
            add_regression_conformal(model, y, u, math.inf, OutcomeSet.interval(50.0, 100.0))
        with self.assertRaises(ValueError):
            add_regression_conformal(model, y, u, -1.0, OutcomeSet.interval(50.0, 100.0))
        with self.assertRaises(ValueError):
            add_regression_conformal(model, y, u, 1.0, OutcomeSet.classes((0,), 2))
        loose = model.add_var("loose", lb=0.0, ub=1.0)
        with self.assertRaises(ValueError):
            add_regression_conformal(model, y, loose, 1.0, OutcomeSet.interval(50.0, 100.0))

    def _logit_model(self):
        model = MipModel("logits")
        logits = [model.add_var(f"h{k}", lb=-5.0, ub=5.0) for k in range(3)]
        return model, logits

    def test_classification_set(self):
        EXPECTED_STATUS = [
            ((2.0, -3.0, 1.0), "infeasible"),
            ((-3.0, -3.0, 1.0), "optimal"),
            ((-3.0, -3.0, -2.0), "infeasible"),
        ]
        outcome = OutcomeSet.classes((2,), 3)
        model, logits = self._logit_model()
        add_classification_conformal(model, logits, 1.0, outcome, big_m=20.0)
        for label in ("conformal_in0", "conformal_out2", "conformal_desired", "conformal_exclude0"):
            model.constraint(label)
        for values, expected in EXPECTED_STATUS:
            for var, value in zip(logits, values):
                model.fix(var, value)
            self.assertEqual(solve(model).status, expected, msg=str(values))

    def test_classification_big_m(self):
        outcome = OutcomeSet.classes((2,), 3)
        bounds = [(-5.0, 5.0)] * 3
        self.assertAlmostEqual(required_big_m(bounds, 1.0, outcome), 6.0 + 1e-6)
        self.assertEqual(argmax_big_m(bounds, 0, 1), 10.0)
        model, logits = self._logit_model()
        with self.assertRaisesRegex(ValueError, "does not cover"):
            add_classification_conformal(model, logits, 1.0, outcome, big_m=2.0, logit_bounds=bounds)
        with self.assertRaises(CalibrationInfeasibleError):
            add_classification_conformal(model, logits, math.inf, outcome, big_m=20.0)
        with self.assertRaises(ValueError):
            add_classification_conformal(model, logits, 1.0, outcome, big_m=0.0)
        with self.assertRaises(ValueError):
            add_classification_conformal(model, logits[:2], 1.0, outcome, big_m=20.0)


class FormulationTester(unittest.TestCase):
    """
    Testing suite for the MICL, W-MICL and C-MICL builders
    """

    def _objective(self, formulation):
        result = branch_and_bound(formulation.model, rel_gap=0.0, time_limit=600.0)
        self.assertIn(result.status, SOLVED_STATUSES)
        self.assertTrue(formulation.model.check_feasible(result.x))
        return result.objective

    def test_micl(self):
        formulation = build_micl(toy_problem(), relu_difference())
        self.assertEqual(formulation.method, "micl")
        self.assertAlmostEqual(self._objective(formulation), 0.5, places=6)
        formulation.model.constraint("outcome_lower")
        with self.assertRaises(KeyError):
            formulation.model.constraint("outcome_upper")

    def test_task_mismatch(self):
        classifier = Mlp([np.eye(2)], [np.zeros(2)], task="classification")
        with self.assertRaises(ValueError):
            build_micl(toy_problem(), classifier)
        with self.assertRaises(ValueError):
            build_micl(toy_problem(), random_mlp(0))

    def test_wmicl_threshold(self):
        EXPECTED_THRESHOLDS = [(10, 0.1, 9), (5, 0.1, 5), (1, 0.1, 1), (20, 0.05, 19), (4, 0.5, 2)]
        for n_models, alpha, expected in EXPECTED_THRESHOLDS:
            self.assertEqual(wmicl_threshold(n_models, alpha), expected)

    def test_wmicl(self):
        members = [relu_difference(1.0), relu_difference(-1.0)]
        formulation = build_wmicl(toy_problem(), members, alpha=0.5)
        self.assertEqual(len(formulation.z_vars), 2)
        self.assertEqual(formulation.model.constraint("cardinality").rhs, 1.0)
        formulation.model.constraint("m0_lower")
        self.assertAlmostEqual(self._objective(formulation), 0.5, places=6)

        formulation = build_wmicl(toy_problem(), members, alpha=0.1)
        self.assertEqual(formulation.model.constraint("cardinality").rhs, 2.0)
        result = branch_and_bound(formulation.model, rel_gap=0.0)
        self.assertEqual(result.status, "infeasible")

    def test_wmicl_single_member(self):
        single = self._objective(build_wmicl(toy_problem(), [relu_difference()], alpha=0.1))
        self.assertAlmostEqual(single, self._objective(build_micl(toy_problem(), relu_difference())), places=6)

    def test_wmicl_errors(self):
        with self.assertRaises(ValueError):
            build_wmicl(toy_problem(), [], alpha=0.1)
        with self.assertRaises(ValueError):
            build_wmicl(toy_problem(), [relu_difference()], alpha=1.0)

    def test_wmicl_enforced_members(self):
        r"""
        Test that at every W-MICL solution at least `ceil((1 - alpha) P)` members, re-evaluated natively, predict an
        outcome inside the target set
        """
        problem = toy_problem()
        for n_models in (5, 10):
            members = [shifted_difference(shift) for shift in np.linspace(-0.3, 0.3, n_models)]
            formulation = build_wmicl(problem, members, alpha=0.1)
            result = branch_and_bound(formulation.model, rel_gap=0.0, time_limit=600.0)
            self.assertIn(result.status, SOLVED_STATUSES)
            x = formulation.decision(result.x)
            inside = sum(member.predict(x)[0] >= problem.outcome.lower - 1e-6 for member in members)
            self.assertGreaterEqual(inside, wmicl_threshold(n_models, 0.1), msg=f"P={n_models}")

    def _regression_calibration(self, q_hat, mondrian_q=None):
        return Calibration(
            alpha=0.1, n_cal=20, score_kind="normalized-residual", q_hat=q_hat, mondrian_q=mondrian_q
        )

    def test_cmicl_regression(self):
        formulation = build_cmicl(
            toy_problem(), relu_difference(), self._regression_calibration(0.2), uncertainty=constant_uncertainty()
        )
        self.assertIsNotNone(formulation.u_var)
        self.assertEqual(len(formulation.outputs), 2)
        formulation.model.constraint("conformal_lower")
        self.assertAlmostEqual(self._objective(formulation), 0.7, places=6)

    def test_cmicl_zero_quantile_matches_micl(self):
        conformal = build_cmicl(
            toy_problem(), relu_difference(), self._regression_calibration(0.0), uncertainty=constant_uncertainty()
        )
        plain = build_micl(toy_problem(), relu_difference())
        self.assertAlmostEqual(self._objective(conformal), self._objective(plain), places=6)

    def test_cmicl_nested(self):
        r"""
        Test that a larger quantile shrinks the feasible region, so the optimum never improves
        """
        previous = self._objective(build_micl(toy_problem(), relu_difference()))
        for q_hat in (0.0, 0.1, 0.25, 0.4):
            formulation = build_cmicl(
                toy_problem(),
                relu_difference(),
                self._regression_calibration(q_hat),
                uncertainty=constant_uncertainty(),
            )
            objective = self._objective(formulation)
            self.assertGreaterEqual(objective, previous - 1e-9)
            previous = objective
        with self.assertRaises(CalibrationInfeasibleError):
            build_cmicl(
                toy_problem(),
                relu_difference(),
                self._regression_calibration(math.inf),
                uncertainty=constant_uncertainty(),
            )

    def test_cmicl_mondrian(self):
        calibration = self._regression_calibration(5.0, mondrian_q={0: (0.2, 10), 1: (0.4, 10)})
        formulation = build_cmicl(toy_problem(), relu_difference(), calibration, uncertainty=constant_uncertainty())
        self.assertAlmostEqual(self._objective(formulation), 0.7, places=6)

    def test_cmicl_mondrian_missing_group(self):
        r"""
        Test that a calibration set without infeasible outcomes makes the conformal formulation infeasible
        """
        with self.assertWarns(UserWarning):
            calibration = mondrian_calibrate([0.1, 0.2, 0.3] * 10, [1] * 30, 0.1)
        with self.assertRaises(CalibrationInfeasibleError):
            build_cmicl(toy_problem(), relu_difference(), calibration, uncertainty=constant_uncertainty())

    def test_cmicl_regression_errors(self):
        with self.assertRaisesRegex(ValueError, "uncertainty"):
            build_cmicl(toy_problem(), relu_difference(), self._regression_calibration(0.2))
        classification = Calibration(alpha=0.1, n_cal=20, score_kind="negative-true-logit", q_hat=0.2)
        with self.assertRaises(ValueError):
            build_cmicl(toy_problem(), relu_difference(), classification, uncertainty=constant_uncertainty())

    def _classifier(self):
        return Mlp([np.array([[1.0, -1.0], [-1.0, 1.0]])], [np.zeros(2)], task="classification")

    def _classification_calibration(self, q_hat, max_abs_logit=1.0):
        return Calibration(
            alpha=0.1, n_cal=50, score_kind="negative-true-logit", q_hat=q_hat, max_abs_logit=max_abs_logit
        )

    def test_micl_argmax(self):
        problem = toy_problem(OutcomeSet.classes((0,), 2))
        formulation = build_micl(problem, self._classifier())
        formulation.model.constraint("argmax_0_over_1")
        formulation.model.constraint("argmax_any")
        self.assertAlmostEqual(self._objective(formulation), 0.0, places=6)

    def test_cmicl_classification(self):
        EXPECTED_OBJECTIVES = [(0.3, 0.3 + 1e-6), (-0.2, 0.2)]
        problem = toy_problem(OutcomeSet.classes((0,), 2))
        for q_hat, expected in EXPECTED_OBJECTIVES:
            formulation = build_cmicl(problem, self._classifier(), self._classification_calibration(q_hat))
            self.assertEqual(formulation.big_m, 4.0)
            self.assertAlmostEqual(self._objective(formulation), expected, places=5)

    def test_cmicl_big_m(self):
        problem = toy_problem(OutcomeSet.classes((0,), 2))
        with self.assertWarns(UserWarning):
            formulation = build_cmicl(problem, self._classifier(), self._classification_calibration(0.3, 0.1))
        self.assertGreater(formulation.big_m, 0.4)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            formulation = build_cmicl(problem, self._classifier(), self._classification_calibration(0.3), big_m=9.0)
        self.assertEqual(formulation.big_m, 9.0)
        with self.assertRaisesRegex(ValueError, "does not cover"):
            build_cmicl(problem, self._classifier(), self._classification_calibration(0.3), big_m=0.5)
        with self.assertRaises(CalibrationInfeasibleError):
            build_cmicl(problem, self._classifier(), self._classification_calibration(math.inf))
