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
import heapq
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import FEASIBILITY_TOL, INTEGRALITY_TOL
from ..mip.model import MipModel, VarRef
from ..utils import logging
from .simplex import LinearProgram, simplex_solve


logger = logging.get_logger(__name__)

MIP_STATUSES = ("optimal", "gap-reached", "infeasible", "unbounded", "node-limit", "time-limit")
SOLVED_STATUSES = ("optimal", "gap-reached")


@dataclass
class SolveResult:
    r"""
    Outcome of a branch-and-bound run.

    Args:
        status (`str`): one of `MIP_STATUSES`.
        x (`np.ndarray`, *optional*): incumbent assignment.
        objective (`float`, *optional*): incumbent objective.
        bound (`float`): best proven lower bound.
        gap (`float`): `(objective - bound) / max(|objective|, 1e-9)`, `inf` without incumbent.
        nodes (`int`): LP relaxations solved.
        seconds (`float`): wall time.
    """

    status: str
    x: Optional[np.ndarray]
    objective: Optional[float]
    bound: float
    gap: float
    nodes: int
    seconds: float

    @property
    def solved(self):
        return self.status in SOLVED_STATUSES

    @property
    def has_incumbent(self):
        return self.x is not None

    def value(self, var: VarRef) -> float:
        if self.x is None:
            raise ValueError(f"no incumbent available (status {self.status})")
        return float(self.x[var.index])

    def values(self, refs):
        return np.array([self.value(ref) for ref in refs])

    def to_dict(self):
        return {
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "seconds": self.seconds,
            "x": None if self.x is None else self.x.tolist(),
        }


def relative_gap(incumbent, bound):
    if incumbent is None or not math.isfinite(incumbent):
        return math.inf
    return max(0.0, (incumbent - bound) / max(abs(incumbent), 1e-9))


class _Search(object):
    def __init__(self, model, rel_gap, node_limit, time_limit, node_callback):
        self.model = model
        arrays = model.to_arrays()
        self.lp = LinearProgram(
            c=arrays.c, A=arrays.A, senses=arrays.senses, b=arrays.b, lb=arrays.lb, ub=arrays.ub, c0=arrays.c0
        )
        self.integer = np.flatnonzero(arrays.integrality)
        self.rel_gap = rel_gap
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.node_callback = node_callback
        self.start = time.perf_counter()
        self.nodes = 0
        self.incumbent = None
        self.incumbent_x = None
        self.heap = []
        self.seq = 0

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def limit_status(self):
        if self.nodes >= self.node_limit:
            return "node-limit"
        if self.elapsed >= self.time_limit:
            return "time-limit"
        return None

    def cutoff(self, objective):
        if self.incumbent is None:
            return False
        return objective >= self.incumbent - 1e-9 * max(1.0, abs(self.incumbent))

    def open_bound(self, current=math.inf):
        bound = min([node[0] for node in self.heap[:1]] + [current])
        if self.incumbent is not None:
            bound = min(bound, self.incumbent)
        return bound

    def solve_node(self, lb, ub, current_bound=math.inf):
        """Solve one LP relaxation. Returns `(status, objective, x, branch_index)`."""
        self.nodes += 1
        solution = simplex_solve(self.lp.with_bounds(lb, ub))
        if solution.status != "optimal":
            return solution.status, None, None, None
        x = solution.x
        fractions = np.abs(x[self.integer] - np.round(x[self.integer]))
        if fractions.size and fractions.max() > INTEGRALITY_TOL:
            return "branch", solution.objective, x, int(self.integer[np.argmax(fractions)])
        self.offer(x, solution.objective, current_bound)
        return "integral", solution.objective, x, None

    def offer(self, x, objective, current_bound):
        snapped = x.copy()
        snapped[self.integer] = np.round(snapped[self.integer])
        if self.model.check_feasible(snapped, FEASIBILITY_TOL):
            x = snapped
        elif not self.model.check_feasible(x, FEASIBILITY_TOL):
            logger.warning(f"node {self.nodes}: integral LP solution fails the feasibility check, skipped")
            return
        objective = self.model.evaluate(self.model.objective, x)
        if self.incumbent is not None and objective >= self.incumbent:
            return
        self.incumbent, self.incumbent_x = objective, x
        bound = self.open_bound(current_bound)
        gap = relative_gap(objective, bound)
        logger.info(
            f"node={self.nodes} incumbent={objective:.10g} bound={bound:.10g} gap={gap:.6g} elapsed={self.elapsed:.3f}"
        )
        if self.node_callback is not None:
            self.node_callback(
                {"node": self.nodes, "incumbent": objective, "bound": bound, "gap": gap, "elapsed": self.elapsed}
            )

    def push(self, objective, lb, ub, x, branch):
        heapq.heappush(self.heap, (objective, self.seq, lb, ub, x, branch))
        self.seq += 1

    def children(self, lb, ub, x, j):
        value = x[j]
        down_ub = ub.copy()
        down_ub[j] = math.floor(value)
        up_lb = lb.copy()
        up_lb[j] = math.ceil(value)
        down, up = (lb, down_ub), (up_lb, ub)
        if value - math.floor(value) >= 0.5:
            return up, down
        return down, up

    def dive(self, objective, lb, ub, x, j):
        """Depth-first dive from an open node: follow the child rounding toward the LP value, queue the other."""
        while True:
            if self.limit_status():
                self.push(objective, lb, ub, x, j)
                return
            preferred, other = self.children(lb, ub, x, j)
            status, obj, x_other, j_other = self.solve_node(*other, current_bound=objective)
            if status == "branch" and not self.cutoff(obj):
                self.push(obj, other[0], other[1], x_other, j_other)
            status, obj, x_pref, j_pref = self.solve_node(*preferred, current_bound=objective)
            if status != "branch" or self.cutoff(obj):
                return
            objective, (lb, ub), x, j = obj, preferred, x_pref, j_pref

    def result(self, status):
        bound = self.open_bound()
        if status == "optimal" and self.incumbent is not None:
            bound = self.incumbent
        if status == "infeasible" or self.incumbent is None:
            bound = bound if self.heap else math.inf
        if status == "unbounded":
            bound = -math.inf
        return SolveResult(
            status=status,
            x=self.incumbent_x,
            objective=self.incumbent,
            bound=float(bound),
            gap=relative_gap(self.incumbent, bound),
            nodes=self.nodes,
            seconds=self.elapsed,
        )

    def run(self):
        lb = self.lp.lb.copy()
        ub = self.lp.ub.copy()
        lb[self.integer] = np.ceil(lb[self.integer] - INTEGRALITY_TOL)
        ub[self.integer] = np.floor(ub[self.integer] + INTEGRALITY_TOL)

        status, objective, x, j = self.solve_node(lb, ub)
        if status in ("infeasible", "unbounded"):
            return self.result(status)
        if status == "branch":
            self.push(objective, lb, ub, x, j)

        while True:
            while self.heap and self.cutoff(self.heap[0][0]):
                heapq.heappop(self.heap)
            if not self.heap:
                return self.result("optimal" if self.incumbent is not None else "infeasible")
            if self.incumbent is not None and relative_gap(self.incumbent, self.open_bound()) <= self.rel_gap:
                return self.result("gap-reached")
            limit = self.limit_status()
            if limit:
                return self.result(limit)
            objective, _, lb, ub, x, j = heapq.heappop(self.heap)
            self.dive(objective, lb, ub, x, j)


def branch_and_bound(
    model: MipModel,
    rel_gap: float = 0.01,
    node_limit: int = 20000,
    time_limit: float = 60.0,
    node_callback: Optional[Callable[[dict], None]] = None,
) -> SolveResult:
    r"""
    Solve a MILP by best-bound branch and bound over simplex LP relaxations.

    Open nodes are kept in a heap keyed by LP bound. Branching uses the most fractional integer variable (lowest index
    on ties). From every selected node the search dives depth-first into the child that rounds toward the LP value.

    Args:
        model (`MipModel`):
            The program to solve. It is not modified.
        rel_gap (`float`, *optional*, defaults to 0.01):
            Stop once `(incumbent - bound) / max(|incumbent|, 1e-9) <= rel_gap`.
        node_limit (`int`, *optional*, defaults to 20000):
            Maximum number of LP relaxations.
        time_limit (`float`, *optional*, defaults to 60.0):
            Wall-clock limit in seconds.
        node_callback (`Callable`, *optional*):
            Called with `{"node", "incumbent", "bound", "gap", "elapsed"}` on every incumbent improvement.
    """
    if rel_gap < 0:
        raise ValueError(f"rel_gap must be >= 0 - got {rel_gap}")
    if node_limit < 1:
        raise ValueError(f"node_limit must be >= 1 - got {node_limit}")
    if time_limit <= 0:
        raise ValueError(f"time_limit must be > 0 - got {time_limit}")
    search = _Search(model, rel_gap, node_limit, time_limit, node_callback)
    result = search.run()
    logger.debug(f"branch and bound finished: {result.status} after {result.nodes} nodes in {result.seconds:.3f}s")
    return result
