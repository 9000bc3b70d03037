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
"""
Split conformal calibration. A calibration of N scores at level alpha keeps the k-th smallest score with
k = ceil((1 - alpha)(N + 1)), or +inf when k > N. Mondrian calibration repeats this inside every group.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..core import U_FLOOR, ceil_rank, format_float
from ..utils import logging


logger = logging.get_logger(__name__)

SCORE_KINDS = ("normalized-residual", "negative-true-logit")
INFEASIBLE_GROUP = 0
FEASIBLE_GROUP = 1


def score_regression(h_pred: float, u_pred: float, y: float, u_floor: float = U_FLOOR) -> float:
    """Normalized residual `|h - y| / u`."""
    if u_pred < u_floor:
        raise ValueError(f"u_pred={u_pred} is below u_floor={u_floor}")
    return abs(h_pred - y) / u_pred


def score_classification(logits: Sequence[float], true_class: int) -> float:
    """Negative logit of the true class."""
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    if not 0 <= true_class < logits.shape[0]:
        raise ValueError(f"true_class={true_class} is out of range for {logits.shape[0]} logits")
    return float(-logits[true_class])


def regression_scores(h_pred, u_pred, y, u_floor: float = U_FLOOR) -> np.ndarray:
    h_pred, u_pred, y = (np.asarray(a, dtype=np.float64).reshape(-1) for a in (h_pred, u_pred, y))
    if np.any(u_pred < u_floor):
        raise ValueError(f"uncertainty predictions must be >= u_floor={u_floor}")
    return np.abs(h_pred - y) / u_pred


def classification_scores(logits, labels) -> np.ndarray:
    logits = np.array(logits, dtype=np.float64, ndmin=2)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if np.any(labels < 0) or np.any(labels >= logits.shape[1]):
        raise ValueError(f"labels must lie in 0..{logits.shape[1] - 1}")
    return -logits[np.arange(labels.shape[0]), labels]


def conformal_quantile(scores: Sequence[float], alpha: float) -> float:
    """
    The `ceil((1 - alpha)(N + 1))`-th smallest score, or `inf` when that rank exceeds N.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.shape[0] == 0:
        raise ValueError("cannot compute a conformal quantile of an empty score list")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1) - got {alpha}")
    n = scores.shape[0]
    rank = ceil_rank((1.0 - alpha) * (n + 1))
    if rank > n:
        return math.inf
    return float(np.sort(scores, kind="stable")[rank - 1])


@dataclass(frozen=True)
class Calibration:
    r"""
    Result of a conformal calibration.

    Args:
        alpha (`float`):
            Miscoverage level in (0, 1).
        n_cal (`int`):
            Number of calibration scores.
        score_kind (`str`):
            `"normalized-residual"` or `"negative-true-logit"`.
        q_hat (`float`):
            Marginal quantile over all scores, possibly `inf`.
        mondrian_q (`Dict[int, Tuple[float, int]]`, *optional*):
            Group id -> (group quantile, group size) for Mondrian calibration.
        max_abs_logit (`float`, *optional*):
            Largest absolute calibration logit, the base of the default classification big-M.
    """

    alpha: float
    n_cal: int
    score_kind: str
    q_hat: float
    mondrian_q: Optional[Dict[int, Tuple[float, int]]] = None
    max_abs_logit: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1) - got {self.alpha}")
        if self.score_kind not in SCORE_KINDS:
            raise ValueError(f"score_kind must be one of {SCORE_KINDS} - got {self.score_kind}")
        if self.n_cal < 1:
            raise ValueError(f"n_cal must be >= 1 - got {self.n_cal}")

    @property
    def is_mondrian(self):
        return self.mondrian_q is not None

    @property
    def task(self):
        return "regression" if self.score_kind == "normalized-residual" else "classification"

    def quantile_for(self, group: Optional[int] = None) -> float:
        """Quantile applied to a point of `group`; the marginal quantile outside Mondrian mode."""
        if not self.is_mondrian:
            return self.q_hat
        if group is None:
            raise ValueError("Mondrian calibration needs a group id")
        if int(group) not in self.mondrian_q:
            raise ValueError(f"group {group} has no calibration members")
        return self.mondrian_q[int(group)][0]

    def encoder_quantile(self) -> float:
        """
        Quantile that decides whether an outcome outside the target set enters the conformal set. Under the
        feasibility grouping, only outcomes of the infeasible group (id 0) can leave the target set.
        """
        if not self.is_mondrian:
            return self.q_hat
        return self.quantile_for(INFEASIBLE_GROUP)

    def desired_quantile(self) -> float:
        """Quantile applied to outcomes inside the target set (group 1 under Mondrian calibration)."""
        if not self.is_mondrian:
            return self.q_hat
        return self.quantile_for(FEASIBLE_GROUP)

    def to_dict(self):
        payload = {
            "alpha": self.alpha,
            "n_cal": self.n_cal,
            "score_kind": self.score_kind,
            "q_hat": format_float(self.q_hat),
        }
        if self.is_mondrian:
            payload["groups"] = [
                {"group": group, "q_hat": format_float(q), "size": size}
                for group, (q, size) in sorted(self.mondrian_q.items())
            ]
        if self.max_abs_logit is not None:
            payload["max_abs_logit"] = self.max_abs_logit
        return payload

    @classmethod
    def from_dict(cls, payload):
        mondrian_q = None
        if "groups" in payload:
            mondrian_q = {int(g["group"]): (float(g["q_hat"]), int(g["size"])) for g in payload["groups"]}
        return cls(
            alpha=float(payload["alpha"]),
            n_cal=int(payload["n_cal"]),
            score_kind=payload["score_kind"],
            q_hat=float(payload["q_hat"]),
            mondrian_q=mondrian_q,
            max_abs_logit=payload.get("max_abs_logit"),
        )


def _warn_infinite(q_hat, where):
    if math.isinf(q_hat):
        message = f"{where}: too few calibration scores for this alpha, the conformal quantile is infinite"
        warnings.warn(message, UserWarning)
        logger.warning(message)


def marginal_calibrate(
    scores: Sequence[float],
    alpha: float,
    score_kind: str = "normalized-residual",
    max_abs_logit: Optional[float] = None,
) -> Calibration:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    q_hat = conformal_quantile(scores, alpha)
    _warn_infinite(q_hat, "marginal calibration")
    return Calibration(
        alpha=alpha, n_cal=scores.shape[0], score_kind=score_kind, q_hat=q_hat, max_abs_logit=max_abs_logit
    )


def mondrian_calibrate(
    scores: Sequence[float],
    groups: Sequence[int],
    alpha: float,
    score_kind: str = "normalized-residual",
    max_abs_logit: Optional[float] = None,
) -> Calibration:
    """
    One quantile per group, each computed from that group's own scores and size. A feasibility group without
    calibration members gets an infinite quantile and size 0.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    groups = np.asarray(groups, dtype=np.int64).reshape(-1)
    if scores.shape[0] != groups.shape[0]:
        raise ValueError(f"got {scores.shape[0]} scores but {groups.shape[0]} group ids")
    mondrian_q = {}
    for group in np.unique(groups):
        members = scores[groups == group]
        q = conformal_quantile(members, alpha)
        _warn_infinite(q, f"mondrian group {group}")
        mondrian_q[int(group)] = (q, int(members.shape[0]))
    for group in (INFEASIBLE_GROUP, FEASIBLE_GROUP):
        if group not in mondrian_q:
            _warn_infinite(math.inf, f"mondrian group {group} (no calibration members)")
            mondrian_q[group] = (math.inf, 0)
    return Calibration(
        alpha=alpha,
        n_cal=scores.shape[0],
        score_kind=score_kind,
        q_hat=conformal_quantile(scores, alpha),
        mondrian_q=mondrian_q,
        max_abs_logit=max_abs_logit,
    )


def calibrate_regression(predictor, uncertainty, X, y, alpha, groups=None, u_floor: float = U_FLOOR) -> Calibration:
    """Score held-out rows with `|h(x) - y| / u(x)` and calibrate, per group when `groups` is given."""
    scores = regression_scores(predictor.predict(X), uncertainty.predict(X), y, u_floor=u_floor)
    if groups is None:
        return marginal_calibrate(scores, alpha, "normalized-residual")
    return mondrian_calibrate(scores, groups, alpha, "normalized-residual")


def calibrate_classification(predictor, X, labels, alpha, groups=None) -> Calibration:
    """Score held-out rows with the negative true-class logit and calibrate."""
    logits = predictor.predict(X)
    scores = classification_scores(logits, labels)
    max_abs_logit = float(np.max(np.abs(logits)))
    if groups is None:
        return marginal_calibrate(scores, alpha, "negative-true-logit", max_abs_logit=max_abs_logit)
    return mondrian_calibrate(scores, groups, alpha, "negative-true-logit", max_abs_logit=max_abs_logit)


def default_big_m(max_abs_logit: float, safety: float = 4.0) -> float:
    """Classification big-M: the largest calibration logit magnitude scaled by a safety factor."""
    if max_abs_logit is None or not math.isfinite(max_abs_logit):
        raise ValueError(f"max_abs_logit must be finite - got {max_abs_logit}")
    return safety * max(abs(max_abs_logit), 1e-9)


@dataclass
class CoverageReport:
    """Empirical coverage: overall and per group / stratum. Strata without test points are absent."""

    overall: float
    n_test: int
    groups: Dict[int, Tuple[float, int]] = field(default_factory=dict)
    strata: Dict[str, Tuple[float, int]] = field(default_factory=dict)

    def rows(self):
        yield "overall", "all", self.n_test, self.overall
        for group, (coverage, n) in sorted(self.groups.items()):
            yield "group", str(group), n, coverage
        for stratum, (coverage, n) in self.strata.items():
            yield "stratum", stratum, n, coverage


def coverage_eval(
    calib: Calibration,
    test_scores: Sequence[float],
    test_groups: Optional[Sequence[int]] = None,
    strata: Optional[Sequence[str]] = None,
) -> CoverageReport:
    r"""
    Fraction of test points whose score is within the applicable quantile.

    Args:
        calib (`Calibration`):
            Marginal or Mondrian calibration.
        test_scores (`Sequence[float]`):
            Scores of the test points at their true outcomes.
        test_groups (`Sequence[int]`, *optional*):
            Group id per test point. Required in Mondrian mode, where every point is held to its group's quantile.
        strata (`Sequence[str]`, *optional*):
            Extra stratum label per test point (e.g. deciles of y) to report coverage per stratum.
    """
    scores = np.asarray(test_scores, dtype=np.float64).reshape(-1)
    if scores.shape[0] == 0:
        raise ValueError("coverage needs at least one test point")
    if test_groups is not None:
        test_groups = np.asarray(test_groups, dtype=np.int64).reshape(-1)
        if test_groups.shape[0] != scores.shape[0]:
            raise ValueError(f"got {scores.shape[0]} scores but {test_groups.shape[0]} group ids")

    if calib.is_mondrian:
        if test_groups is None:
            raise ValueError("Mondrian coverage needs a group id per test point")
        absent = sorted(set(test_groups.tolist()) - set(calib.mondrian_q))
        if absent:
            raise ValueError(f"test groups {absent} are absent from the calibration")
        thresholds = np.array([calib.mondrian_q[g][0] for g in test_groups.tolist()])
    else:
        thresholds = np.full(scores.shape[0], calib.q_hat)
    covered = scores <= thresholds

    report = CoverageReport(overall=float(np.mean(covered)), n_test=int(scores.shape[0]))
    if test_groups is not None:
        for group in np.unique(test_groups):
            mask = test_groups == group
            report.groups[int(group)] = (float(np.mean(covered[mask])), int(mask.sum()))
    if strata is not None:
        strata = np.asarray(strata).reshape(-1)
        if strata.shape[0] != scores.shape[0]:
            raise ValueError(f"got {scores.shape[0]} scores but {strata.shape[0]} stratum labels")
        for label in sorted(set(strata.tolist()), key=str):
            mask = strata == label
            report.strata[str(label)] = (float(np.mean(covered[mask])), int(mask.sum()))
    return report
