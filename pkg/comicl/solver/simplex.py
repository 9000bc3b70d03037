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
Dense-tableau two-phase primal simplex.

Variables are brought to standard form by shifting (`x = lb + x'`, `x = ub - x'`) or splitting free variables
(`x = x+ - x-`); finite upper bounds of shifted variables become explicit rows and fixed variables are substituted
as constants. Pricing is Dantzig's rule until a run of degenerate pivots, after which Bland's rule is used for the
rest of the solve.
"""
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..core import LP_FEASIBILITY_TOL, NumericalBreakdownError
from ..mip.model import MipModel
from ..utils import logging


logger = logging.get_logger(__name__)

LP_STATUSES = ("optimal", "infeasible", "unbounded")

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
DEGENERATE_RUN = 50


@dataclass
class LinearProgram:
    r"""
    `min c x + c0` subject to `A x (senses) b` and `lb <= x <= ub`. Sense codes: -1 for `<=`, 0 for `==`,
    1 for `>=`.
    """

    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c0: float = 0.0

    @classmethod
    def from_model(cls, model: MipModel):
        """LP relaxation of `model` (integrality dropped)."""
        arrays = model.to_arrays()
        return cls(
            c=arrays.c, A=arrays.A, senses=arrays.senses, b=arrays.b, lb=arrays.lb, ub=arrays.ub, c0=arrays.c0
        )

    def with_bounds(self, lb, ub):
        return replace(self, lb=np.asarray(lb, dtype=np.float64), ub=np.asarray(ub, dtype=np.float64))

    @property
    def n_vars(self):
        return self.c.shape[0]


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray]
    objective: float
    pivots: int


class _Tableau(object):
    def __init__(self, T, basis, max_pivots):
        self.T = T
        self.basis = basis
        self.max_pivots = max_pivots
        self.pivots = 0

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        column = T[:, col].copy()
        column[row] = 0.0
        T -= np.outer(column, T[row])
        T[row, col] = 1.0
        self.basis[row] = col
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise NumericalBreakdownError("simplex iteration limit reached", self.pivots)

    def run(self, allowed):
        """Pivot until optimal or unbounded over the columns flagged in `allowed`."""
        T = self.T
        degenerate = 0
        bland = False
        while True:
            reduced = T[-1, :-1]
            candidates = np.where(allowed & (reduced < -COST_TOL))[0]
            if candidates.size == 0:
                return "optimal"
            if bland:
                col = candidates[0]
            else:
                col = candidates[np.argmin(reduced[candidates])]
            column = T[:-1, col]
            rhs = T[:-1, -1]
            positive = column > PIVOT_TOL
            if not np.any(positive):
                return "unbounded"
            ratios = np.full(column.shape[0], np.inf)
            ratios[positive] = rhs[positive] / column[positive]
            best = ratios.min()
            ties = np.where(ratios <= best + 1e-12 * max(1.0, abs(best)))[0]
            row = ties[np.argmin(np.asarray(self.basis)[ties])]
            if best <= PIVOT_TOL:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN and not bland:
                    logger.debug(f"switching to Bland's rule after {degenerate} degenerate pivots")
                    bland = True
            else:
                degenerate = 0
            self.pivot(row, col)
            np.maximum(T[:-1, -1], 0.0, out=T[:-1, -1])


def _standard_form(lp: LinearProgram):
    n = lp.n_vars
    lb, ub = lp.lb, lp.ub
    offset = np.zeros(n)
    col_var, col_sign, upper_rows = [], [], []
    for j in range(n):
        if math.isfinite(lb[j]) and math.isfinite(ub[j]) and ub[j] - lb[j] <= 1e-12:
            offset[j] = lb[j]
            continue
        if math.isfinite(lb[j]):
            offset[j] = lb[j]
            col_var.append(j)
            col_sign.append(1.0)
            if math.isfinite(ub[j]):
                upper_rows.append((len(col_var) - 1, ub[j] - lb[j]))
        elif math.isfinite(ub[j]):
            offset[j] = ub[j]
            col_var.append(j)
            col_sign.append(-1.0)
        else:
            col_var += [j, j]
            col_sign += [1.0, -1.0]
    col_var = np.asarray(col_var, dtype=np.int64)
    col_sign = np.asarray(col_sign, dtype=np.float64)

    k = col_var.shape[0]
    A = lp.A[:, col_var] * col_sign if k else np.zeros((lp.A.shape[0], 0))
    b = lp.b - lp.A @ offset
    senses = np.asarray(lp.senses, dtype=np.int64)
    if upper_rows:
        U = np.zeros((len(upper_rows), k))
        for r, (col, bound) in enumerate(upper_rows):
            U[r, col] = 1.0
        A = np.vstack([A, U])
        b = np.concatenate([b, [bound for _, bound in upper_rows]])
        senses = np.concatenate([senses, -np.ones(len(upper_rows), dtype=np.int64)])
    c = lp.c[col_var] * col_sign
    return A, senses, b, c, offset, col_var, col_sign


def _zero_row_violated(sense, rhs):
    tol = LP_FEASIBILITY_TOL * max(1.0, abs(rhs))
    if sense < 0:
        return rhs < -tol
    if sense > 0:
        return rhs > tol
    return abs(rhs) > tol


def _verify(lp, x, pivots):
    senses = np.asarray(lp.senses)
    lhs = lp.A @ x
    scale = np.maximum(1.0, np.maximum(np.abs(lp.b), np.abs(lp.A) @ np.abs(x)))
    tol = LP_FEASIBILITY_TOL * scale
    residual = lhs - lp.b
    bad = ((senses < 0) & (residual > tol)) | ((senses > 0) & (residual < -tol))
    bad |= (senses == 0) & (np.abs(residual) > tol)
    if np.any(bad):
        row = int(np.where(bad)[0][0])
        raise NumericalBreakdownError(f"LP solution violates row {row} by {abs(residual[row]):.3g}", pivots)
    bound_tol = LP_FEASIBILITY_TOL * np.maximum(1.0, np.abs(x))
    if np.any(x < lp.lb - bound_tol) or np.any(x > lp.ub + bound_tol):
        raise NumericalBreakdownError("LP solution violates a variable bound", pivots)


def simplex_solve(lp: LinearProgram, max_pivots: Optional[int] = None) -> LpSolution:
    r"""
    Solve the linear program with the two-phase primal simplex method.

    Args:
        lp (`LinearProgram`):
            Problem data with finite coefficients.
        max_pivots (`int`, *optional*):
            Iteration cap; exceeding it raises `NumericalBreakdownError`. Defaults to `50 * (rows + columns) + 1000`.

    Returns:
        `LpSolution` with status `optimal`, `infeasible` or `unbounded`. Optimal solutions are re-checked against the
        original rows and bounds; a violation above 1e-7 (relative to the row scale) raises `NumericalBreakdownError`.
    """
    if not (np.all(np.isfinite(lp.c)) and np.all(np.isfinite(lp.A)) and np.all(np.isfinite(lp.b))):
        raise ValueError("LP coefficients must be finite")
    if np.any(lp.lb > lp.ub + LP_FEASIBILITY_TOL):
        return LpSolution("infeasible", None, math.nan, 0)

    A, senses, b, c, offset, col_var, col_sign = _standard_form(lp)
    k = c.shape[0]

    nonzero = np.any(A != 0.0, axis=1) if k else np.zeros(A.shape[0], dtype=bool)
    for i in np.where(~nonzero)[0]:
        if _zero_row_violated(senses[i], b[i]):
            return LpSolution("infeasible", None, math.nan, 0)
    A, senses, b = A[nonzero], senses[nonzero], b[nonzero]

    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    senses[flip] *= -1

    m = A.shape[0]
    n_slack = int(np.sum(senses != 0))
    n_art = int(np.sum(senses >= 0))
    width = k + n_slack + n_art
    if max_pivots is None:
        max_pivots = 50 * (m + width) + 1000

    T = np.zeros((m + 1, width + 1))
    T[:m, :k] = A
    T[:m, -1] = b
    basis = []
    slack_col, art_col = k, k + n_slack
    art_rows = []
    for i in range(m):
        if senses[i] < 0:
            T[i, slack_col] = 1.0
            basis.append(slack_col)
            slack_col += 1
            continue
        if senses[i] > 0:
            T[i, slack_col] = -1.0
            slack_col += 1
        T[i, art_col] = 1.0
        basis.append(art_col)
        art_rows.append(i)
        art_col += 1
    standard = T[:m, : k + n_slack].copy()
    tableau = _Tableau(T, basis, max_pivots)

    is_art = np.zeros(width, dtype=bool)
    is_art[k + n_slack :] = True
    if art_rows:
        T[-1, :] = -T[art_rows, :].sum(axis=0)
        T[-1, is_art] = 0.0
        tableau.run(np.ones(width, dtype=bool))
        infeasibility = -T[-1, -1]
        if infeasibility > LP_FEASIBILITY_TOL * max(1.0, float(np.max(b, initial=0.0))):
            return LpSolution("infeasible", None, math.nan, tableau.pivots)

        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if not is_art[tableau.basis[i]]:
                continue
            candidates = np.where(~is_art & (np.abs(T[i, :-1]) > PIVOT_TOL))[0]
            if candidates.size:
                tableau.pivot(i, candidates[0])
            else:
                keep[i] = False
        np.maximum(T[:-1, -1], 0.0, out=T[:-1, -1])
        if not np.all(keep):
            rows = np.concatenate([np.where(keep)[0], [m]])
            tableau.T = T = T[rows]
            tableau.basis = [tableau.basis[i] for i in np.where(keep)[0]]
            standard = standard[keep]
            b = b[keep]
            m = int(keep.sum())

    T = tableau.T = np.delete(tableau.T, np.where(is_art)[0], axis=1)
    cost = np.concatenate([c, np.zeros(n_slack)])
    T[-1, :-1] = cost
    T[-1, -1] = 0.0
    for i, col in enumerate(tableau.basis):
        if cost[col] != 0.0:
            T[-1, :] -= cost[col] * T[i, :]
    status = tableau.run(np.ones(k + n_slack, dtype=bool))
    if status == "unbounded":
        return LpSolution("unbounded", None, -math.inf, tableau.pivots)

    x_std = np.zeros(k + n_slack)
    x_std[tableau.basis] = T[:m, -1]
    if m:
        try:
            refined = np.linalg.solve(standard[:, tableau.basis], b)
            if np.all(np.isfinite(refined)) and refined.min() >= -LP_FEASIBILITY_TOL:
                x_std[tableau.basis] = np.maximum(refined, 0.0)
        except np.linalg.LinAlgError:
            logger.debug("singular final basis, keeping tableau values")

    x = offset.copy()
    np.add.at(x, col_var, col_sign * x_std[:k])
    _verify(lp, x, tableau.pivots)
    return LpSolution("optimal", x, float(lp.c @ x + lp.c0), tableau.pivots)
