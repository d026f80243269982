"""Adapter to an external MILP solver (HiGHS through scipy).

Used as an independent oracle for the MILP optimum and for enumerating the
MILP-feasible routing patterns; the annealing path never depends on it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix

from .model import MilpModel


@dataclass
class MilpSolution:
    status: str  # optimal, infeasible, limit, error
    x: Optional[np.ndarray]
    objective: Optional[int]


def _matrix(model: MilpModel, extra_rows=()):
    rows, cols, vals, lo, hi = [], [], [], [], []
    for r, c in enumerate(list(model.constraints) + list(extra_rows)):
        for i, a in c.coeffs.items():
            rows.append(r)
            cols.append(i)
            vals.append(a)
        lo.append(c.lower)
        hi.append(c.upper)
    n_rows = len(model.constraints) + len(extra_rows)
    A = csr_matrix((vals, (rows, cols)), shape=(n_rows, model.n_vars))
    return A, np.array(lo, dtype=float), np.array(hi, dtype=float)


def solve_milp(model: MilpModel, time_limit: float = 60.0, extra_rows=()) -> MilpSolution:
    c = np.zeros(model.n_vars)
    for i, a in model.objective.items():
        c[i] = a
    cons = []
    if model.constraints or extra_rows:
        A, lo, hi = _matrix(model, extra_rows)
        cons = [LinearConstraint(A, lo, hi)]
    res = milp(
        c,
        constraints=cons,
        integrality=np.ones(model.n_vars),
        bounds=Bounds(model.lower.astype(float), model.upper.astype(float)),
        options={"time_limit": time_limit, "presolve": True},
    )
    if res.status == 0:
        x = np.rint(res.x).astype(np.int64)
        return MilpSolution("optimal", x, model.objective_value(x))
    if res.status == 2:
        return MilpSolution("infeasible", None, None)
    if res.status == 1 and res.x is not None:
        x = np.rint(res.x).astype(np.int64)
        return MilpSolution("limit", x, model.objective_value(x))
    return MilpSolution("error" if res.status != 1 else "limit", None, None)


def feasible_patterns(model: MilpModel, prefix: str = "e.", limit: int = 10000) -> list:
    """All distinct feasible assignments of the variables named `prefix*`.

    Repeatedly solves a feasibility problem and cuts off each pattern found
    with a no-good row.
    """
    from .model import LinearConstraint as Row

    idx = [i for i, v in enumerate(model.variables) if v.name.startswith(prefix)]
    feas = model.copy()
    feas.set_objective({})
    cuts, found = [], []
    while len(found) < limit:
        sol = solve_milp(feas, extra_rows=cuts)
        if sol.status != "optimal":
            break
        ones = [i for i in idx if sol.x[i] == 1]
        found.append((tuple(ones), sol.x))
        # sum_{i in ones} (1 - x_i) + sum_{i not in ones} x_i >= 1
        coeffs = {i: (-1 if i in ones else 1) for i in idx}
        cuts.append(Row(coeffs, lower=1 - len(ones), tag="no_good"))
    return found
