"""Turn annealer bitstrings back into validated route sets."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from ..instance import MissionInstance
from ..milp.routes import Route, RouteSet, ValidationReport, battery_trace, extract_routes, validate_routes
from ..qubo import Qubo, decode


@dataclass
class DecodedRoutes:
    routes: Optional[RouteSet]
    problems: list = field(default_factory=list)  # structural issues in the e-graph
    residuals: dict = field(default_factory=dict)  # per-family MILP violation
    report: Optional[ValidationReport] = None

    @property
    def feasible(self) -> bool:
        return not self.problems and not self.residuals and self.report is not None and self.report.ok

    def summary(self) -> str:
        if self.feasible:
            return f"feasible, makespan {self.routes.makespan}"
        parts = list(self.problems)
        parts += [f"{tag} residual {v}" for tag, v in sorted(self.residuals.items())]
        if self.report is not None:
            parts += [f"{t}: {m}" for t, m in self.report.violations]
        return "; ".join(parts) or "infeasible"


def with_true_battery(inst: MissionInstance, routes: RouteSet) -> RouteSet:
    """Replace reported battery levels (model lower bounds) by the actual charge trace."""
    out = []
    for r in routes.routes:
        out.append(Route(r.drone, list(r.nodes), list(r.times), battery_trace(inst, r), r.quantity))
    return RouteSet(out, routes.makespan if routes.makespan is not None else routes.end_time)


def decode_routes(inst: MissionInstance, q: Qubo, bits) -> DecodedRoutes:
    if q.model is None or "instance" not in q.model.meta:
        raise ValueError("QUBO carries no mission model to decode against")
    x, residuals = decode(q, bits)
    routes, problems = extract_routes(q.model, x)
    opts = q.model.meta.get("opts")
    if opts is not None and not opts.crash:
        inst = replace(inst, crash_pairs=())  # the model was built without crash rows
    report = validate_routes(inst, routes)
    return DecodedRoutes(routes, problems, residuals, report)
