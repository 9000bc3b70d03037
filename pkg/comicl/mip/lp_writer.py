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
CPLEX LP text emission. Sections are written in the order Minimize, Subject To, Bounds, Generals, Binaries, End;
numbers use 15 significant digits.
"""
import math

from .model import MipModel


DUMMY_VAR = "__dummy"


def _num(value):
    return f"{value:.15g}"


def _linear(terms, names):
    parts = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        body = names[var.index] if magnitude == 1.0 else f"{_num(magnitude)} {names[var.index]}"
        if not parts:
            parts.append(body if sign == "+" else f"- {body}")
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)


def _bound_line(variable):
    lb, ub = variable.lb, variable.ub
    if math.isinf(lb) and math.isinf(ub):
        return f" {variable.name} free"
    if lb == ub:
        return f" {variable.name} = {_num(lb)}"
    lower = "-inf" if math.isinf(lb) else _num(lb)
    upper = "+inf" if math.isinf(ub) else _num(ub)
    return f" {lower} <= {variable.name} <= {upper}"


def emit_lp_text(model: MipModel) -> str:
    """Deterministic LP-format document of `model`. An empty objective is written as `obj: 0 __dummy`."""
    names = [variable.name for variable in model.variables]
    lines = [f"\\* Problem: {model.name} *\\", "Minimize"]

    objective = _linear(model.objective.terms, names)
    use_dummy = not objective
    if use_dummy:
        objective = f"0 {DUMMY_VAR}"
    if model.objective.constant != 0.0:
        sign = "-" if model.objective.constant < 0 else "+"
        objective += f" {sign} {_num(abs(model.objective.constant))}"
    lines.append(f" obj: {objective}")

    lines.append("Subject To")
    for constraint in model.constraints:
        body = _linear(constraint.expr.terms, names)
        if not body:
            # LP format needs a variable on the left-hand side
            body = f"0 {DUMMY_VAR}"
            use_dummy = True
        sense = "=" if constraint.sense == "==" else constraint.sense
        lines.append(f" {constraint.label}: {body} {sense} {_num(constraint.rhs)}")

    lines.append("Bounds")
    for variable in model.variables:
        if variable.kind == "binary" and variable.lb == 0.0 and variable.ub == 1.0:
            continue
        lines.append(_bound_line(variable))
    if use_dummy:
        lines.append(f" {DUMMY_VAR} = 0")

    generals = [v.name for v in model.variables if v.kind == "integer"]
    if generals:
        lines.append("Generals")
        lines.extend(f" {name}" for name in generals)
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {name}" for name in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: MipModel, path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(emit_lp_text(model))
    return path
