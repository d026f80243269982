"""Route sets, direct validation of route traces, and conversion to/from MILP assignments.

Time convention: ``times[k]`` is when the drone is at ``nodes[k]`` with its
objective done (arrival); the wait at ``nodes[k]`` before leaving for
``nodes[k+1]`` is ``times[k+1] - times[k] - T``. Hovering and recharging
happen during that wait and are charged to the node being waited at.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..instance import MissionInstance, edge_key
from .build import arc_allowed, directed_arcs, edge_group, node_role
from .model import MilpModel


@dataclass
class Route:
    drone: int
    nodes: list
    times: list
    battery: Optional[list] = None
    quantity: Optional[list] = None

    def waits(self, inst: MissionInstance) -> list:
        return [
            self.times[k + 1] - self.times[k] - inst.edge(self.nodes[k], self.nodes[k + 1]).time
            for k in range(len(self.nodes) - 1)
        ]

    @property
    def end_time(self) -> int:
        return self.times[-1] if self.times else 0

    def arcs(self) -> list:
        return list(zip(self.nodes[:-1], self.nodes[1:]))


@dataclass
class RouteSet:
    routes: list
    makespan: Optional[int] = None

    def route_of(self, drone: int) -> Optional[Route]:
        for r in self.routes:
            if r.drone == drone:
                return r
        return None

    @property
    def end_time(self) -> int:
        return max((r.end_time for r in self.routes), default=0)

    def sequences(self) -> frozenset:
        return frozenset((r.drone, tuple(r.nodes)) for r in self.routes)

    def energy(self, inst: MissionInstance) -> int:
        return sum(inst.edge(u, v).battery for r in self.routes for u, v in r.arcs())

    def to_json(self, inst: Optional[MissionInstance] = None) -> dict:
        out = {
            "makespan": self.makespan if self.makespan is not None else self.end_time,
            "routes": [],
        }
        for r in self.routes:
            entry = {"drone": r.drone, "nodes": list(r.nodes), "times": [int(t) for t in r.times]}
            if r.battery is not None:
                entry["battery"] = [int(b) for b in r.battery]
            if r.quantity is not None:
                entry["quantity"] = [int(q) for q in r.quantity]
            if inst is not None:
                entry["waits"] = [int(w) for w in r.waits(inst)]
            out["routes"].append(entry)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "RouteSet":
        routes = [
            Route(r["drone"], list(r["nodes"]), list(r["times"]), r.get("battery"), r.get("quantity"))
            for r in data["routes"]
        ]
        return cls(routes, data.get("makespan"))


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def add(self, tag: str, message: str) -> None:
        self.violations.append((tag, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def tags(self) -> set:
        return {t for t, _ in self.violations}

    def to_json(self) -> dict:
        return {"valid": self.ok, "violations": [{"tag": t, "message": m} for t, m in self.violations]}


def battery_trace(inst: MissionInstance, route: Route) -> list:
    """Largest battery level the model allows on arrival at each stop.

    Charging at a recharge node is capped at the node's tank size, and the
    charge gained while waiting may not exceed it; both mirror the model rows.
    """
    drone = inst.drones[route.drone]
    level = drone.b_max
    out = [level]
    for k, (u, v) in enumerate(route.arcs()):
        e = inst.edge(u, v)
        wait = max(0, route.times[k + 1] - route.times[k] - e.time)
        if inst.node(u).has("recharge"):
            level = min(level + inst.recharge_rate(u) * wait, inst.battery_cap(u))
        else:
            level -= inst.hover_rate(u) * wait
        level = min(level - e.battery, inst.battery_cap(v))
        out.append(level)
    return out


def quantity_trace(inst: MissionInstance, route: Route) -> list:
    level = inst.quantity_cap(route.nodes[0])
    out = [level]
    for u, v in route.arcs():
        if inst.node(v).has("recharge"):
            level = inst.quantity_cap(v)
        else:
            level = min(level - inst.node(u).q, inst.quantity_cap(v))
        out.append(level)
    return out


def validate_routes(inst: MissionInstance, routes: RouteSet, partial: bool = False) -> ValidationReport:
    """Check a route set against every constraint family directly on its traces.

    With ``partial`` set, set-level checks (coverage, crash, one route per
    drone) are skipped so that single routes can be screened.
    """
    rep = ValidationReport()
    visited = {}
    for r in routes.routes:
        if not 0 <= r.drone < len(inst.drones):
            rep.add("structure", f"unknown drone {r.drone}")
            continue
        if len(r.nodes) < 2 or len(r.times) != len(r.nodes):
            rep.add("structure", f"drone {r.drone}: route needs >= 2 nodes and one time per node")
            continue
        if any(n not in inst for n in r.nodes):
            rep.add("structure", f"drone {r.drone}: route visits unknown nodes")
            continue
        if r.nodes[0] != inst.start_node(r.drone) or r.nodes[-1] != inst.end_node(r.drone):
            rep.add("structure", f"drone {r.drone}: route must run from its start to its end node")
        for n in r.nodes:
            if n in visited:
                rep.add("structure", f"node {n} visited more than once")
            visited[n] = r.drone
        bad_arc = False
        for u, v in r.arcs():
            if not arc_allowed(inst, u, v):
                rep.add("structure", f"drone {r.drone}: arc {u}->{v} is not in the graph")
                bad_arc = True
        if bad_arc:
            continue
        _check_route(inst, r, rep)

    if partial:
        return rep
    drones = [r.drone for r in routes.routes]
    for i in range(len(inst.drones)):
        if drones.count(i) != 1:
            rep.add("structure", f"drone {i} must have exactly one route")
    for n in inst.nodes:
        if node_role(n) == "objective" and n.id not in visited:
            rep.add("objective_coverage", f"objective node {n.id} not visited")
    used = {}
    for r in routes.routes:
        for u, v in r.arcs():
            if inst.edge(u, v) is not None:
                used.setdefault(edge_group(inst, u, v), []).append((u, v))
    groups = {edge_group(inst, u, v) for u, v in directed_arcs(inst) if inst.edge(u, v).mandatory}
    for g in sorted(groups):
        if len(used.get(g, [])) != 1:
            rep.add("mandatory_edge", f"mandatory edge {g} traversed {len(used.get(g, []))} times")
    times = {n: t for r in routes.routes for n, t in zip(r.nodes, r.times)}
    for p, q in inst.crash_pairs:
        kp, kq = edge_key(*p), edge_key(*q)
        trav = {edge_key(u, v) for r in routes.routes for u, v in r.arcs()}
        if kp in trav and kq in trav:
            h1 = (min(times[p[0]], times[p[1]]), max(times[p[0]], times[p[1]]))
            h2 = (min(times[q[0]], times[q[1]]), max(times[q[0]], times[q[1]]))
            if not (h1[1] <= h2[0] or h2[1] <= h1[0]):
                rep.add("crash", f"edges {kp} and {kq} are in use at overlapping times {h1} / {h2}")
    if routes.makespan is not None:
        if any(r.end_time > routes.makespan for r in routes.routes):
            rep.add("makespan", f"declared makespan {routes.makespan} is below a route's end time")
        if routes.makespan > inst.t_max:
            rep.add("makespan", f"makespan {routes.makespan} exceeds t_max {inst.t_max}")
    return rep


def _check_route(inst: MissionInstance, r: Route, rep: ValidationReport) -> None:
    drone = inst.drones[r.drone]
    if r.times[0] != 0:
        rep.add("time", f"drone {r.drone}: must leave its start at time 0")
    for k, w in enumerate(r.waits(inst)):
        if w < 0:
            rep.add("time", f"drone {r.drone}: reaches {r.nodes[k + 1]} at {r.times[k + 1]}, too early")
    for n, t in zip(r.nodes, r.times):
        if not 0 <= t <= inst.t_max:
            rep.add("time_bounds", f"drone {r.drone}: time {t} at {n} outside [0, {inst.t_max}]")
        tw = inst.node(n).time_window
        if tw is not None and not tw[0] <= t <= tw[1]:
            rep.add("time_window", f"drone {r.drone}: time {t} at {n} outside window {tw}")

    for k, u in enumerate(r.nodes[:-1]):
        if inst.node(u).has("recharge"):
            e = inst.edge(u, r.nodes[k + 1])
            wait = r.times[k + 1] - r.times[k] - e.time
            if inst.recharge_rate(u) * wait > inst.battery_cap(u):
                rep.add("recharge_cap", f"drone {r.drone}: charges more than a full tank at {u}")
    level = battery_trace(inst, r)
    for n, b in zip(r.nodes, level):
        if b < 0:
            rep.add("battery", f"drone {r.drone}: battery runs out before {n} ({b})")
    if r.battery is not None:
        if len(r.battery) != len(r.nodes):
            rep.add("structure", f"drone {r.drone}: battery trace length mismatch")
        else:
            for n, rb, b in zip(r.nodes, r.battery, level):
                if not 0 <= rb <= inst.battery_cap(n):
                    rep.add("battery_bounds", f"drone {r.drone}: battery {rb} at {n} outside [0, {inst.battery_cap(n)}]")
                elif rb > b:
                    rep.add("battery", f"drone {r.drone}: reported battery {rb} at {n} exceeds available {b}")

    if inst.uses_quantity:
        qlev = quantity_trace(inst, r)
        for n, lv in zip(r.nodes, qlev):
            if lv < inst.node(n).q:
                rep.add("quantity", f"drone {r.drone}: not enough resource at {n} ({lv} < {inst.node(n).q})")
        if r.quantity is not None:
            for n, rq, lv in zip(r.nodes, r.quantity, qlev):
                if not 0 <= rq <= inst.quantity_cap(n):
                    rep.add("quantity_bounds", f"drone {r.drone}: quantity {rq} at {n} out of range")
                elif rq > lv:
                    rep.add("quantity", f"drone {r.drone}: reported quantity {rq} at {n} exceeds available {lv}")

    for n in r.nodes:
        node = inst.node(n)
        if node.owner is not None and node.owner != r.drone:
            rep.add("drone_id", f"drone {r.drone} uses {n}, owned by drone {node.owner}")
        for k in range(len(drone.id_bits)):
            if node.capabilities >> k & 1 and not drone.has_capability(k):
                rep.add("capability", f"drone {r.drone} lacks capability {k} required at {n}")


# ---------------------------------------------------------------- MILP bridge


def extract_routes(model: MilpModel, x) -> tuple:
    """Walk the e-variables from every start node.

    Returns (RouteSet or None, list of problems). Problems are reported when
    the chosen arcs are not a union of start-to-end paths.
    """
    inst = model.meta["instance"]
    arcs = model.meta["arcs"]
    succ = {}
    chosen = [(u, v) for u, v in arcs if x[model.index(f"e.{u}.{v}")] == 1]
    problems = []
    for u, v in chosen:
        if u in succ:
            problems.append(f"node {u} has more than one chosen outgoing arc")
        succ[u] = v
    routes, used = [], set()
    for i in range(len(inst.drones)):
        cur = inst.start_node(i)
        nodes = [cur]
        while cur in succ and len(nodes) <= len(inst.nodes):
            used.add((cur, succ[cur]))
            cur = succ[cur]
            nodes.append(cur)
        if nodes[-1] != inst.end_node(i):
            problems.append(f"drone {i}: path from start does not reach its end node")
        times = [int(x[model.index(f"t.{n}")]) for n in nodes]
        battery = [int(x[model.index(f"B.{n}")]) for n in nodes]
        quantity = None
        if inst.uses_quantity:
            quantity = [int(x[model.index(f"Q.{n}")]) for n in nodes]
        routes.append(Route(i, nodes, times, battery, quantity))
    stray = [a for a in chosen if a not in used]
    if stray:
        problems.append(f"sub-tour or stray arcs not reachable from any start: {stray}")
    makespan = int(x[model.index("T")]) if model.has("T") else None
    return RouteSet(routes, makespan), problems


def assignment_from_routes(model: MilpModel, routes: RouteSet) -> np.ndarray:
    """Integer assignment encoding a route set; unvisited nodes sit at their lower bounds."""
    inst = model.meta["instance"]
    values = {}
    for v in model.variables:
        if v.role in ("e_edge", "x_node", "y_product"):
            values[v.name] = 0
    times = {}
    for r in routes.routes:
        drone = inst.drones[r.drone]
        level = battery_trace(inst, r)
        qlev = quantity_trace(inst, r) if inst.uses_quantity else None
        for k, n in enumerate(r.nodes):
            times[n] = r.times[k]
            values[f"t.{n}"] = r.times[k]
            var = model.var(f"B.{n}")
            values[f"B.{n}"] = min(max(level[k], var.lower), var.upper)
            if qlev is not None:
                qv = model.var(f"Q.{n}")
                values[f"Q.{n}"] = min(max(qlev[k], qv.lower), qv.upper)
            if model.has(f"x.{n}"):
                values[f"x.{n}"] = 1
            for b in range(len(drone.id_bits)):
                values[f"D.{n}.{b}"] = int(drone.id_bits[b])
        for u, v in r.arcs():
            values[f"e.{u}.{v}"] = 1
    trav = {edge_key(u, v) for r in routes.routes for u, v in r.arcs()}
    for idx, (p, q) in enumerate(inst.crash_pairs):
        if not model.has(f"y.{idx}"):
            continue
        both = edge_key(*p) in trav and edge_key(*q) in trav
        values[f"y.{idx}"] = int(both)
        if both:
            values[f"b.{idx}"] = int(max(times[p[0]], times[p[1]]) > min(times[q[0]], times[q[1]]))
    if model.has("T"):
        values["T"] = routes.makespan if routes.makespan is not None else routes.end_time
    return model.vector(values)
