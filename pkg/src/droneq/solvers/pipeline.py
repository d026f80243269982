"""Iterative decomposition: solve all drones, polish each route alone, fix the slowest, repeat.

Stages per outer iteration:
  1. anneal the joint model over the remaining drones and objectives;
  2. re-solve each found route alone over the objectives it covers (kept only if not worse);
  3. fix the route that finishes last and remove what it covers;
  4. repeat until every drone has a fixed route;
  5. re-time all fixed routes together with crash constraints switched on.

Budgets are counted in annealing restarts (deterministic), split geometrically
across outer iterations.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ..instance import MissionInstance, edge_key
from ..milp.build import FormulationOptions, build_milp, fix_partial, rewrite_bases
from ..milp.model import ModelError
from ..milp.routes import Route, RouteSet, assignment_from_routes, validate_routes
from ..qubo import auto_lambda, encode, milp_to_qubo
from .anneal import AnnealSchedule, restart_seeds, simulated_anneal
from .decode import decode_routes, with_true_battery


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    restarts: int = 1000  # total annealing restarts across all stages
    sweeps: int = 1000
    seed: int = 0
    recharge_copies: int = 2
    objective: str = "makespan"
    lambdas: Optional[dict] = None  # absolute per-family overrides
    coverage_boost: int = 3  # multiplier on degree penalties over auto_lambda
    split: float = 0.5  # share of the remaining budget taken by each outer iteration
    moves: str = "slack"
    budget_ms: Optional[int] = None  # optional wall-clock cap on top of the restart budget

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class PipelineResult:
    routes: RouteSet
    instance: MissionInstance  # the rewritten instance the routes refer to
    log: list = field(default_factory=list)
    config: Optional[PipelineConfig] = None

    @property
    def makespan(self) -> int:
        return self.routes.end_time


def stage_budgets(total: int, n_iter: int, final: bool, split: float = 0.5) -> list:
    """Restart counts per outer iteration (plus the final pass): split, split^2, ..., remainder."""
    n = n_iter + int(final)
    shares, left = [], 1.0
    for k in range(n):
        s = left if k == n - 1 else left * split
        shares.append(s)
        left -= s
    out = [max(1, int(round(total * s))) for s in shares]
    return out


def penalty_weights(model, cfg: PipelineConfig) -> dict:
    lam = auto_lambda(model)
    for tag in ("degree_in", "degree_out"):
        if tag in lam:
            lam[tag] *= cfg.coverage_boost
    lam.update(cfg.lambdas or {})
    return lam


class _Clock:
    def __init__(self, budget_ms):
        self.t0 = time.perf_counter()
        self.budget = None if budget_ms is None else budget_ms / 1000.0

    def left(self) -> Optional[float]:
        if self.budget is None:
            return None
        return max(0.0, self.budget - (time.perf_counter() - self.t0))


def _anneal_model(model, cfg, restarts, seed, clock, init_routes=None):
    q = milp_to_qubo(model, penalty_weights(model, cfg))
    init = None
    if init_routes is not None:
        x = assignment_from_routes(model, init_routes)
        if model.is_feasible(x):
            init = encode(q, x)
    sched = AnnealSchedule(sweeps=cfg.sweeps, restarts=max(1, restarts), seed=seed, moves=cfg.moves)
    res = simulated_anneal(q, sched, time_limit=clock.left(), init=init)
    dec = decode_routes(model.meta["instance"], q, res.best_bits)
    return q, res, dec


def _sub_instance(orig: MissionInstance, drones: list, drop_nodes: set, covered_edges: set) -> MissionInstance:
    """Original-graph instance restricted to some drones, without dropped nodes.

    Bases of drones that are not in `drones` are dropped unless another kept drone shares them.
    Mandatory edges already traversed by fixed routes lose their flag.
    """
    kept_bases = {orig.drones[i].base for i in drones}
    other_bases = {d.base for d in orig.drones} - kept_bases
    nodes = []
    for n in orig.nodes:
        if n.id in drop_nodes or n.id in other_bases:
            continue
        nodes.append(n)
    ids = {n.id for n in nodes}
    edges = {}
    for k, e in orig.edges.items():
        if k[0] in ids and k[1] in ids:
            edges[k] = replace(e, mandatory=False) if k in covered_edges else e
    crash = tuple((p, q) for p, q in orig.crash_pairs if set(p) <= ids and set(q) <= ids)
    return MissionInstance(tuple(nodes), edges, tuple(orig.drones[i] for i in drones), crash, orig.t_max)


def _to_original(rw: MissionInstance, nodes: list) -> list:
    return [rw.node(n).origin or n for n in nodes]


def _translate(route: Route, sub_rw: MissionInstance, full_rw: MissionInstance, drone: int) -> Route:
    """Rename a route found in a sub-instance to the full rewritten instance's copies."""
    recs = [n.id for n in full_rw.nodes if n.owner == drone and n.has("recharge")]
    out = []
    for n in route.nodes:
        node = sub_rw.node(n)
        if node.owner is None:
            out.append(n)
        elif node.has("start"):
            out.append(full_rw.start_node(drone))
        elif node.has("end"):
            out.append(full_rw.end_node(drone))
        else:
            out.append(recs.pop(0))
    return Route(drone, out, list(route.times), route.battery, route.quantity)


def _route_cost(inst, r: Route, objective: str) -> int:
    if objective == "energy":
        return sum(inst.edge(u, v).battery for u, v in r.arcs())
    return r.end_time


def solve_pipeline(orig: MissionInstance, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    if orig.rewritten:
        raise ValueError("solve_pipeline expects the original instance")
    opts = FormulationOptions(objective=cfg.objective, crash=False)
    full_rw = rewrite_bases(orig, cfg.recharge_copies)
    n_drones = len(orig.drones)
    final_pass = n_drones > 1 and bool(orig.crash_pairs)
    budgets = stage_budgets(cfg.restarts, n_drones, final_pass, cfg.split)
    seeds = restart_seeds(cfg.seed, len(budgets) * (n_drones + 1) + 1)
    seed_iter = iter(int(s) for s in seeds)
    clock = _Clock(cfg.budget_ms)
    log = []

    remaining = list(range(n_drones))
    fixed = {}  # global drone -> Route in full_rw names
    used_nodes, covered = set(), set()
    for it, budget in enumerate(budgets[:n_drones]):
        if not remaining:
            break
        # ---- step 1: joint model over the remaining drones
        sub = _sub_instance(orig, remaining, used_nodes, covered)
        try:
            sub_rw = rewrite_bases(sub, cfg.recharge_copies)
            model = build_milp(sub_rw, opts)
        except ModelError as exc:
            raise PipelineError(f"{it + 1}.1", str(exc)) from exc
        n2 = len(remaining)
        b1 = max(1, budget // 2)
        _, res, dec = _anneal_model(model, cfg, b1, next(seed_iter), clock)
        log.append({"stage": f"{it + 1}.1", "restarts": res.restarts_done, "energy": res.best_energy,
                    "feasible": dec.feasible})
        if not dec.feasible:
            raise PipelineError(f"{it + 1}.1", "no feasible sample: " + dec.summary())
        local = {r.drone: r for r in dec.routes.routes}

        # ---- step 2: polish each drone's route alone over its own objectives
        b2 = max(1, (budget - b1) // n2)
        for li in range(n2):
            r = local[li]
            visited = set(_to_original(sub_rw, r.nodes))
            others = set()
            for lj, rj in local.items():
                if lj != li:
                    others |= set(_to_original(sub_rw, rj.nodes))
            own_base = orig.drones[remaining[li]].base
            drop = set(used_nodes) | (others - {own_base})
            drop |= {n.id for n in sub.nodes if n.has("objective") and n.id not in visited}
            solo = _sub_instance(orig, [remaining[li]], drop, covered)
            try:
                solo_rw = rewrite_bases(solo, cfg.recharge_copies)
                solo_model = build_milp(solo_rw, opts)
                incumbent = RouteSet([_rename_solo(r, sub_rw, solo_rw)])
                _, res2, dec2 = _anneal_model(solo_model, cfg, b2, next(seed_iter), clock, incumbent)
            except (ModelError, KeyError) as exc:
                log.append({"stage": f"{it + 1}.2", "drone": remaining[li], "skipped": str(exc)})
                continue
            before = _route_cost(sub_rw, r, cfg.objective)
            better = dec2.feasible and _route_cost(solo_rw, dec2.routes.routes[0], cfg.objective) < before
            if better:
                local[li] = _rename_back(dec2.routes.routes[0], solo_rw, sub_rw, li)
            log.append({"stage": f"{it + 1}.2", "drone": remaining[li], "restarts": res2.restarts_done,
                        "energy": res2.best_energy, "feasible": dec2.feasible, "improved": bool(better),
                        "cost_before": before, "cost_after": _route_cost(sub_rw, local[li], cfg.objective)})

        # ---- step 3: fix the route that finishes last (lowest drone index on ties)
        li = max(range(n2), key=lambda k: (_route_cost(sub_rw, local[k], cfg.objective), -k))
        g = remaining[li]
        route = _translate(local[li], sub_rw, full_rw, g)
        fixed[g] = route
        orig_nodes = _to_original(sub_rw, local[li].nodes)
        used_nodes |= set(orig_nodes) - {orig.drones[g].base}
        covered |= {edge_key(a, b) for a, b in zip(orig_nodes[:-1], orig_nodes[1:])}
        remaining.remove(g)
        log.append({"stage": f"{it + 1}.3", "fixed_drone": g, "cost": _route_cost(full_rw, route, cfg.objective)})

    routes = RouteSet([fixed[i] for i in range(n_drones)])
    routes = RouteSet(routes.routes, routes.end_time)

    # ---- step 5: joint re-timing with crash constraints
    if final_pass:
        routes = _final_pass(full_rw, routes, cfg, budgets[-1], next(seed_iter), clock, log)
    routes = with_true_battery(full_rw, routes)
    report = validate_routes(full_rw, routes)
    if not report.ok:
        raise PipelineError("5" if final_pass else "4", "assembled routes invalid: " + str(report.violations))
    return PipelineResult(routes, full_rw, log, cfg)


def _rename_solo(r: Route, sub_rw, solo_rw) -> Route:
    """Route from the joint sub-instance expressed in the single-drone instance's names."""
    recs = [n.id for n in solo_rw.nodes if n.owner == 0 and n.has("recharge")]
    out = []
    for n in r.nodes:
        node = sub_rw.node(n)
        if node.owner is None:
            out.append(n)
        elif node.has("start"):
            out.append(solo_rw.start_node(0))
        elif node.has("end"):
            out.append(solo_rw.end_node(0))
        else:
            out.append(recs.pop(0))
    return Route(0, out, list(r.times))


def _rename_back(r: Route, solo_rw, sub_rw, local_drone: int) -> Route:
    recs = [n.id for n in sub_rw.nodes if n.owner == local_drone and n.has("recharge")]
    out = []
    for n in r.nodes:
        node = solo_rw.node(n)
        if node.owner is None:
            out.append(n)
        elif node.has("start"):
            out.append(sub_rw.start_node(local_drone))
        elif node.has("end"):
            out.append(sub_rw.end_node(local_drone))
        else:
            out.append(recs.pop(0))
    return Route(local_drone, out, list(r.times), r.battery, r.quantity)


def _final_pass(full_rw, routes, cfg, budget, seed, clock, log) -> RouteSet:
    if validate_routes(full_rw, routes).ok:
        log.append({"stage": "5", "restarts": 0, "note": "fixed routes already crash-free"})
        return routes
    model = build_milp(full_rw, FormulationOptions(objective=cfg.objective, crash=True))
    arcs_used = {(u, v) for r in routes.routes for u, v in r.arcs()}
    visited = {n for r in routes.routes for n in r.nodes}
    fix = {}
    for v in model.variables:
        if v.role == "e_edge":
            _, a, b = v.name.split(".")
            fix[v.name] = int((a, b) in arcs_used)
        elif v.role == "x_node":
            fix[v.name] = int(v.name.split(".", 1)[1] in visited)
    trav = {edge_key(u, v) for u, v in arcs_used}
    for idx, (p, q) in enumerate(full_rw.crash_pairs):
        if model.has(f"y.{idx}"):
            fix[f"y.{idx}"] = int(edge_key(*p) in trav and edge_key(*q) in trav)
    try:
        fixed = fix_partial(model, fix)
    except ModelError as exc:
        raise PipelineError("5", str(exc)) from exc
    _, res, dec = _anneal_model(fixed, cfg, budget, seed, clock)
    log.append({"stage": "5", "restarts": res.restarts_done, "energy": res.best_energy, "feasible": dec.feasible})
    if not dec.feasible:
        raise PipelineError("5", "no crash-free timing found: " + dec.summary())
    return dec.routes
