"""Integer linear program container: bounded integer variables, ranged rows, linear objective."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

INF = math.inf

BINARY_ROLES = {"x_node", "e_edge", "D_idbit", "y_product", "b_disjunct"}
ROLES = BINARY_ROLES | {"t_time", "B_battery", "Q_quantity", "T_makespan", "slack", "integer"}


class ModelError(ValueError):
    """Raised for ill-formed models or build-time infeasibility."""


@dataclass
class VarSpec:
    name: str
    lower: int
    upper: int
    role: str = "integer"

    def __post_init__(self):
        if self.role not in ROLES:
            raise ModelError(f"unknown role {self.role!r} for {self.name}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ModelError(f"variable {self.name} needs finite bounds")
        if self.lower > self.upper:
            raise ModelError(f"variable {self.name} has lower {self.lower} > upper {self.upper}")
        if self.role in BINARY_ROLES and not (0 <= self.lower and self.upper <= 1):
            raise ModelError(f"binary variable {self.name} has bounds outside {{0,1}}")

    @property
    def fixed(self) -> bool:
        return self.lower == self.upper


@dataclass
class LinearConstraint:
    coeffs: dict
    lower: float = -INF
    upper: float = INF
    tag: str = ""
    name: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.lower) or math.isfinite(self.upper)):
            raise ModelError(f"constraint {self.name or self.tag} has no finite bound")
        self.coeffs = {int(k): int(v) for k, v in self.coeffs.items() if v != 0}

    @property
    def is_equality(self) -> bool:
        return self.lower == self.upper

    def activity(self, x) -> int:
        return sum(c * int(x[i]) for i, c in self.coeffs.items())

    def violation(self, x) -> int:
        a = self.activity(x)
        if a < self.lower:
            return int(self.lower - a)
        if a > self.upper:
            return int(a - self.upper)
        return 0


@dataclass
class MilpModel:
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    objective_offset: int = 0
    meta: dict = field(default_factory=dict, repr=False)
    _names: dict = field(default_factory=dict, repr=False)

    # -- construction
    def add_var(self, name: str, lower: int, upper: int, role: str = "integer") -> int:
        if name in self._names:
            raise ModelError(f"duplicate variable {name}")
        self.variables.append(VarSpec(name, int(lower), int(upper), role))
        self._names[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_constraint(self, coeffs: dict, lower=-INF, upper=INF, tag: str = "", name: str = "") -> LinearConstraint:
        for i in coeffs:
            if not 0 <= i < len(self.variables):
                raise ModelError(f"constraint {name or tag} references undeclared variable {i}")
        con = LinearConstraint(dict(coeffs), lower, upper, tag, name or f"c{len(self.constraints)}")
        self.constraints.append(con)
        return con

    def set_objective(self, coeffs: dict, offset: int = 0) -> None:
        self.objective = {int(k): int(v) for k, v in coeffs.items() if v != 0}
        self.objective_offset = int(offset)

    # -- lookup
    def index(self, name: str) -> int:
        return self._names[name]

    def has(self, name: str) -> bool:
        return name in self._names

    def var(self, name: str) -> VarSpec:
        return self.variables[self._names[name]]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables], dtype=np.int64)

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables], dtype=np.int64)

    def tags(self) -> list:
        return sorted({c.tag for c in self.constraints})

    # -- evaluation
    def objective_value(self, x) -> int:
        return self.objective_offset + sum(c * int(x[i]) for i, c in self.objective.items())

    def in_bounds(self, x) -> bool:
        return all(v.lower <= x[i] <= v.upper for i, v in enumerate(self.variables))

    def violations(self, x) -> list:
        """(constraint, amount) for every violated row; bound violations use a None constraint."""
        out = [(None, i) for i, v in enumerate(self.variables) if not v.lower <= x[i] <= v.upper]
        out += [(c, c.violation(x)) for c in self.constraints if c.violation(x)]
        return out

    def is_feasible(self, x) -> bool:
        if not self.in_bounds(x):
            return False
        return all(c.violation(x) == 0 for c in self.constraints)

    def assignment(self, x) -> dict:
        return {v.name: int(x[i]) for i, v in enumerate(self.variables)}

    def vector(self, values: dict, default: Optional[int] = None) -> np.ndarray:
        """Dense vector from a name -> value map; missing names take `default` or the lower bound."""
        x = np.array([v.lower if default is None else default for v in self.variables], dtype=np.int64)
        for name, val in values.items():
            x[self._names[name]] = val
        return x

    def copy(self) -> "MilpModel":
        out = MilpModel(
            [copy.copy(v) for v in self.variables],
            [copy.copy(c) for c in self.constraints],
            dict(self.objective),
            self.objective_offset,
            dict(self.meta),
        )
        out._names = dict(self._names)
        return out

    # -- interval arithmetic
    def activity_range(self, coeffs: dict) -> tuple:
        lo = hi = 0
        for i, c in coeffs.items():
            v = self.variables[i]
            if c > 0:
                lo += c * v.lower
                hi += c * v.upper
            else:
                lo += c * v.upper
                hi += c * v.lower
        return lo, hi

    def objective_range(self) -> tuple:
        lo, hi = self.activity_range(self.objective)
        return lo + self.objective_offset, hi + self.objective_offset
