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
from collections import defaultdict
from dataclasses import dataclass
from numbers import Real
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core import FEASIBILITY_TOL, INTEGRALITY_TOL


VAR_KINDS = ("continuous", "integer", "binary")
SENSES = ("<=", "==", ">=")
SENSE_CODES = {"<=": -1, "==": 0, ">=": 1}

_model_ids = itertools.count()


@dataclass(frozen=True)
class VarRef:
    """Handle of a variable, valid only for the model that issued it."""

    index: int
    model_id: int

    def _expr(self):
        return LinExpr([(1.0, self)])

    def __add__(self, other):
        return self._expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._expr() - other

    def __rsub__(self, other):
        return LinExpr.from_any(other) - self._expr()

    def __mul__(self, other):
        return self._expr() * other

    __rmul__ = __mul__

    def __neg__(self):
        return self._expr() * -1.0


@dataclass
class Variable:
    name: str
    kind: str
    lb: float
    ub: float

    @property
    def is_integer(self):
        return self.kind in ("integer", "binary")


class LinExpr(object):
    """Affine expression `sum(coef * var) + constant`."""

    def __init__(self, terms: Optional[Sequence[Tuple[float, VarRef]]] = None, constant: float = 0.0):
        self.terms = []
        for coef, var in terms or []:
            if not isinstance(var, VarRef):
                raise ValueError(f"expression terms must reference a VarRef - got {type(var)}")
            coef = float(coef)
            if not math.isfinite(coef):
                raise ValueError(f"coefficient of variable {var.index} is not finite: {coef}")
            self.terms.append((coef, var))
        self.constant = float(constant)
        if not math.isfinite(self.constant):
            raise ValueError(f"expression constant is not finite: {self.constant}")

    @classmethod
    def from_any(cls, value):
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, VarRef):
            return value._expr()
        if isinstance(value, Real):
            return cls(constant=float(value))
        raise ValueError(f"cannot build an expression from {type(value)}")

    def __add__(self, other):
        other = LinExpr.from_any(other)
        return LinExpr(self.terms + other.terms, self.constant + other.constant)

    __radd__ = __add__

    def __sub__(self, other):
        return self + LinExpr.from_any(other) * -1.0

    def __rsub__(self, other):
        return LinExpr.from_any(other) - self

    def __mul__(self, scalar):
        if not isinstance(scalar, Real):
            raise ValueError("expressions can only be multiplied by scalars")
        scalar = float(scalar)
        return LinExpr([(coef * scalar, var) for coef, var in self.terms], self.constant * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def normalize(self):
        """Merge duplicate variables, drop zero coefficients and order terms by variable index."""
        merged = defaultdict(float)
        refs = {}
        for coef, var in self.terms:
            merged[var] += coef
            refs[var] = var
        terms = [(merged[var], var) for var in sorted(refs, key=lambda v: (v.model_id, v.index)) if merged[var] != 0.0]
        return LinExpr(terms, self.constant)

    @property
    def variables(self):
        return [var for _, var in self.terms]

    def evaluate(self, assignment):
        assignment = np.asarray(assignment, dtype=np.float64)
        return self.constant + sum(coef * assignment[var.index] for coef, var in self.terms)

    def __repr__(self):
        parts = [f"{coef:+.6g}*v{var.index}" for coef, var in self.terms]
        return f"LinExpr({' '.join(parts) or '0'} {self.constant:+.6g})"


def quicksum(items) -> LinExpr:
    terms, constant = [], 0.0
    for item in items:
        item = LinExpr.from_any(item)
        terms.extend(item.terms)
        constant += item.constant
    return LinExpr(terms, constant)


@dataclass
class Constraint:
    expr: LinExpr
    sense: str
    rhs: float
    label: str

    def slack(self, assignment):
        """Signed satisfaction margin; negative values are violations."""
        lhs = self.expr.evaluate(assignment)
        if self.sense == "<=":
            return self.rhs - lhs
        if self.sense == ">=":
            return lhs - self.rhs
        return -abs(lhs - self.rhs)


@dataclass
class MipArrays:
    """Dense matrix form `min c x + c0` s.t. `A x (senses) b`, `lb <= x <= ub`."""

    c: np.ndarray
    c0: float
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray


class MipModel(object):
    r"""
    Mixed-integer linear program `min f(x)` subject to linear constraints and variable bounds.

    Args:
        name (`str`, *optional*, defaults to `"comicl"`):
            Model name, written to LP text.
    """

    def __init__(self, name: str = "comicl"):
        self.name = name
        self.model_id = next(_model_ids)
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective = LinExpr()
        self.sense = "minimize"
        self._names: Dict[str, int] = {}
        self._labels: Dict[str, int] = {}
        self._counters = defaultdict(int)

    def _auto_name(self, prefix, table):
        while True:
            name = f"{prefix}{self._counters[prefix]}"
            self._counters[prefix] += 1
            if name not in table:
                return name

    def _check_ref(self, var):
        if not isinstance(var, VarRef) or var.model_id != self.model_id or not 0 <= var.index < len(self.variables):
            raise ValueError(f"variable reference {var} was not issued by model '{self.name}'")

    def add_var(
        self,
        name: Optional[str] = None,
        kind: str = "continuous",
        lb: float = 0.0,
        ub: float = math.inf,
        prefix: str = "x",
    ) -> VarRef:
        """Append a variable and return its handle. Unnamed variables get `<prefix><counter>` names."""
        if kind not in VAR_KINDS:
            raise ValueError(f"kind must be one of {VAR_KINDS} - got {kind}")
        lb, ub = float(lb), float(ub)
        if math.isnan(lb) or math.isnan(ub):
            raise ValueError("variable bounds must not be NaN")
        if lb > ub:
            raise ValueError(f"lower bound {lb} exceeds upper bound {ub}")
        if kind == "binary" and (lb < 0.0 or ub > 1.0):
            raise ValueError(f"binary variable bounds must lie within [0, 1] - got [{lb}, {ub}]")
        if name is None:
            name = self._auto_name(prefix, self._names)
        elif name in self._names:
            raise ValueError(f"duplicate variable name '{name}'")
        self._names[name] = len(self.variables)
        self.variables.append(Variable(name=name, kind=kind, lb=lb, ub=ub))
        return VarRef(len(self.variables) - 1, self.model_id)

    def add_constraint(self, expr, sense: str, rhs: float = 0.0, label: Optional[str] = None) -> int:
        """Add `expr (sense) rhs`; the expression is normalized and its constant moved to the right-hand side."""
        if sense not in SENSES:
            raise ValueError(f"sense must be one of {SENSES} - got {sense}")
        expr = LinExpr.from_any(expr)
        for var in expr.variables:
            self._check_ref(var)
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ValueError(f"right-hand side must be finite - got {rhs}")
        normalized = expr.normalize()
        rhs -= normalized.constant
        normalized.constant = 0.0
        if label is None:
            label = self._auto_name("c", self._labels)
        elif label in self._labels:
            raise ValueError(f"duplicate constraint label '{label}'")
        self._labels[label] = len(self.constraints)
        self.constraints.append(Constraint(expr=normalized, sense=sense, rhs=rhs, label=label))
        return len(self.constraints) - 1

    def set_objective(self, expr, sense: str = "minimize"):
        if sense != "minimize":
            raise ValueError(f"only minimization is supported - got {sense}")
        expr = LinExpr.from_any(expr)
        for var in expr.variables:
            self._check_ref(var)
        self.objective = expr.normalize()

    def set_bounds(self, var: VarRef, lb: float, ub: float):
        self._check_ref(var)
        variable = self.variables[var.index]
        if lb > ub:
            raise ValueError(f"lower bound {lb} exceeds upper bound {ub}")
        if variable.kind == "binary" and (lb < 0.0 or ub > 1.0):
            raise ValueError(f"binary variable bounds must lie within [0, 1] - got [{lb}, {ub}]")
        variable.lb, variable.ub = float(lb), float(ub)

    def fix(self, var: VarRef, value: float):
        self.set_bounds(var, value, value)

    def var(self, name: str) -> VarRef:
        return VarRef(self._names[name], self.model_id)

    def constraint(self, label: str) -> Constraint:
        return self.constraints[self._labels[label]]

    @property
    def num_vars(self):
        return len(self.variables)

    @property
    def num_constraints(self):
        return len(self.constraints)

    @property
    def num_integer(self):
        return sum(1 for v in self.variables if v.is_integer)

    def evaluate(self, expr, assignment) -> float:
        expr = LinExpr.from_any(expr)
        for var in expr.variables:
            self._check_ref(var)
        return expr.evaluate(assignment)

    def value(self, var: VarRef, assignment) -> float:
        self._check_ref(var)
        return float(np.asarray(assignment)[var.index])

    def violations(self, assignment, tol: float = FEASIBILITY_TOL) -> List[str]:
        """Names of violated bounds, integrality requirements and constraints."""
        assignment = np.asarray(assignment, dtype=np.float64).reshape(-1)
        if assignment.shape[0] != self.num_vars:
            raise ValueError(f"assignment has {assignment.shape[0]} values for {self.num_vars} variables")
        found = []
        for variable, value in zip(self.variables, assignment):
            if value < variable.lb - tol or value > variable.ub + tol:
                found.append(f"bound:{variable.name}")
            elif variable.is_integer and abs(value - round(value)) > max(tol, INTEGRALITY_TOL):
                found.append(f"integrality:{variable.name}")
        for constraint in self.constraints:
            if constraint.slack(assignment) < -tol:
                found.append(constraint.label)
        return found

    def check_feasible(self, assignment, tol: float = FEASIBILITY_TOL) -> bool:
        return not self.violations(assignment, tol)

    def to_arrays(self) -> MipArrays:
        n = self.num_vars
        A = np.zeros((self.num_constraints, n))
        for i, constraint in enumerate(self.constraints):
            for coef, var in constraint.expr.terms:
                A[i, var.index] += coef
        c = np.zeros(n)
        for coef, var in self.objective.terms:
            c[var.index] += coef
        return MipArrays(
            c=c,
            c0=self.objective.constant,
            A=A,
            senses=np.array([SENSE_CODES[con.sense] for con in self.constraints], dtype=np.int64),
            b=np.array([con.rhs for con in self.constraints], dtype=np.float64),
            lb=np.array([v.lb for v in self.variables], dtype=np.float64),
            ub=np.array([v.ub for v in self.variables], dtype=np.float64),
            integrality=np.array([v.is_integer for v in self.variables], dtype=bool),
        )
