"""Graph rewriting and MILP construction for multi-drone mission planning."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

from ..instance import EdgeSpec, MissionInstance, NodeSpec, edge_key, validate_instance
from .gadgets import compute_big_m, gadget_implication, gadget_min_max, gadget_product, switched_leq
from .model import MilpModel, ModelError


@dataclass(frozen=True)
class FormulationOptions:
    objective: str = "makespan"  # or "energy"
    crash: bool = True
    tighten_bounds: bool = True
    big_m_scale: int = 1


def _copy_names(base: str, drone: int, n_here: int, copies: int) -> tuple:
    tag = f"{drone}" if n_here > 1 else ""
    start, end = f"{base}_start{tag}", f"{base}_end{tag}"
    if copies == 1:
        recs = [f"{base}_rec{tag}"]
    else:
        recs = [f"{base}_rec{tag}{'_' if tag else ''}{k}" for k in range(copies)]
    return start, end, recs


def rewrite_bases(inst: MissionInstance, recharge_copies: int = 2) -> MissionInstance:
    """Replace each drone's base by a start copy, an end copy and recharge copies.

    Recharge copies are only created when the base node is itself a recharge
    node. Copies inherit the base's edges.
    """
    if inst.rewritten:
        return inst
    if not inst.drones:
        return inst
    by_base = {}
    for i, d in enumerate(inst.drones):
        by_base.setdefault(d.base, []).append(i)
    copies_of = {}
    new_nodes = []
    for node in inst.nodes:
        if node.id not in by_base:
            if node.has("start") or node.has("end"):
                kinds = node.kinds - {"start", "end"}
                if not kinds:
                    continue
                node = replace(node, kinds=frozenset(kinds))
            new_nodes.append(node)
            continue
        drones = by_base[node.id]
        ids = []
        for i in drones:
            copies = recharge_copies if node.has("recharge") else 0
            start, end, recs = _copy_names(node.id, i, len(drones), copies)
            new_nodes.append(NodeSpec(start, frozenset({"start"}), pos=node.pos, owner=i, origin=node.id))
            for r in recs[:copies]:
                new_nodes.append(
                    NodeSpec(r, frozenset({"recharge", "intermediate"}), pos=node.pos, owner=i, origin=node.id)
                )
            new_nodes.append(NodeSpec(end, frozenset({"end"}), pos=node.pos, owner=i, origin=node.id))
            ids += [start, *recs[:copies], end]
        copies_of[node.id] = ids
    new_edges = {}
    for (a, b), e in inst.edges.items():
        for u in copies_of.get(a, [a]):
            for v in copies_of.get(b, [b]):
                new_edges[edge_key(u, v)] = e
    crash = inst.crash_pairs
    out = MissionInstance(tuple(new_nodes), new_edges, inst.drones, crash, inst.t_max, rewritten=True)
    return validate_instance(out)


def arc_allowed(inst: MissionInstance, u: str, v: str) -> bool:
    if inst.edge(u, v) is None:
        return False
    nu, nv = inst.node(u), inst.node(v)
    if nv.has("start") or nu.has("end"):
        return False
    if nu.owner is not None and nv.owner is not None and nu.owner != nv.owner:
        return False
    return True


def directed_arcs(inst: MissionInstance) -> list:
    arcs = []
    for a, b in inst.edges:
        for u, v in ((a, b), (b, a)):
            if arc_allowed(inst, u, v):
                arcs.append((u, v))
    return arcs


def node_role(node: NodeSpec) -> str:
    if node.has("objective"):
        return "objective"
    if node.has("start"):
        return "start"
    if node.has("end"):
        return "end"
    return "intermediate"


def edge_group(inst: MissionInstance, u: str, v: str) -> tuple:
    """Key of the original (pre-rewrite) undirected edge an arc derives from."""
    ou = inst.node(u).origin or u
    ov = inst.node(v).origin or v
    return edge_key(ou, ov)


def _dijkstra(sources: dict, succ, expand_base=None) -> dict:
    dist = dict(sources)
    heap = [(d, n) for n, d in sources.items()]
    heapq.heapify(heap)
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        base = d if expand_base is None else expand_base(u, d)
        for v, w in succ(u):
            nd = base + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


class _Bounds:
    """Necessary-condition bounds on time and battery for every node."""

    def __init__(self, inst: MissionInstance, arcs: list):
        self.inst = inst
        out, into = {}, {}
        for u, v in arcs:
            e = inst.edge(u, v)
            out.setdefault(u, []).append((v, e))
            into.setdefault(v, []).append((u, e))
        starts = [n.id for n in inst.nodes if n.has("start")]
        ends = [n.id for n in inst.nodes if n.has("end")]
        recs = {n.id for n in inst.nodes if n.has("recharge")}

        self.earliest = _dijkstra({s: 0 for s in starts}, lambda u: [(v, e.time) for v, e in out.get(u, [])])
        self.to_end = _dijkstra({s: 0 for s in ends}, lambda v: [(u, e.time) for u, e in into.get(v, [])])

        # battery needed on arrival to reach the next recharge or end node
        sinks = {n: 0 for n in recs | set(ends)}
        self.b_need = _dijkstra(
            sinks,
            lambda v: [(u, e.battery) for u, e in into.get(v, []) if u not in sinks],
        )
        # battery available on arrival: the best source tank minus the cheapest path
        src = {s: -inst.drones[inst.node(s).owner].b_max for s in starts}
        keys = _dijkstra(
            src,
            lambda u: [(v, e.battery) for v, e in out.get(u, [])],
            expand_base=lambda u, d: -inst.battery_cap(u) if u in recs else d,
        )
        self.b_avail = {n: -k for n, k in keys.items()}


def build_milp(inst: MissionInstance, opts: FormulationOptions = FormulationOptions()) -> MilpModel:
    """Full mission MILP over a rewritten instance."""
    if inst.drones and not inst.rewritten:
        raise ModelError("build_milp expects an instance rewritten by rewrite_bases")
    if opts.objective not in ("makespan", "energy"):
        raise ModelError(f"unknown objective {opts.objective!r}")
    m = MilpModel()
    arcs = directed_arcs(inst)
    bounds = _Bounds(inst, arcs)
    r = len(inst.drones[0].id_bits) if inst.drones else 0
    use_q = inst.uses_quantity
    unusable = set()

    # ---- node variables
    for node in inst.nodes:
        a = node.id
        role = node_role(node)
        if node.has("start"):
            t_lo = t_hi = 0
        else:
            t_lo, t_hi = 0, inst.t_max
            if opts.tighten_bounds:
                t_lo = bounds.earliest.get(a, math.inf)
                t_hi = inst.t_max - bounds.to_end.get(a, math.inf)
            if node.time_window is not None:
                t_lo = max(t_lo, node.time_window[0])
                t_hi = min(t_hi, node.time_window[1])
        cap = inst.battery_cap(a)
        if node.has("start"):
            b_lo = b_hi = inst.drones[node.owner].b_max
            if opts.tighten_bounds and bounds.b_need.get(a, math.inf) > b_hi:
                raise ModelError(f"node {a}: drone {node.owner} cannot reach a recharge or end node")
        else:
            b_lo, b_hi = 0, cap
            if opts.tighten_bounds:
                b_lo = bounds.b_need.get(a, math.inf)
                b_hi = min(cap, bounds.b_avail.get(a, -math.inf))
        if node.owner is not None and r:
            owner_bits = inst.drones[node.owner].id_bits
            if any(node.capabilities >> k & 1 and owner_bits[k] == "0" for k in range(r)):
                t_lo = math.inf  # force the unusable path below
        if t_lo > t_hi or b_lo > b_hi:
            if role != "intermediate":
                why = "time window" if node.time_window is not None and t_lo <= inst.t_max else "bounds"
                raise ModelError(
                    f"node {a}: unsatisfiable {why} (time [{t_lo}, {t_hi}], battery [{b_lo}, {b_hi}])"
                )
            unusable.add(a)
            t_lo = t_hi = 0
            b_lo = b_hi = 0
        m.add_var(f"t.{a}", t_lo, t_hi, "t_time")
        m.add_var(f"B.{a}", b_lo, b_hi, "B_battery")
        if use_q:
            qcap = inst.quantity_cap(a)
            if node.has("start"):
                q_lo = q_hi = qcap
            else:
                q_lo, q_hi = node.q, qcap
            if q_lo > q_hi:
                if role != "intermediate":
                    raise ModelError(f"node {a}: demand {node.q} exceeds every drone's capacity")
                unusable.add(a)
                q_lo = q_hi = 0
            m.add_var(f"Q.{a}", q_lo, q_hi, "Q_quantity")
        for k in range(r):
            lo, hi = 0, 1
            if node.owner is not None:
                lo = hi = int(inst.drones[node.owner].id_bits[k])
            elif node.capabilities >> k & 1:
                lo = 1
            m.add_var(f"D.{a}.{k}", lo, hi, "D_idbit")
        if role == "intermediate":
            m.add_var(f"x.{a}", 0, 0 if a in unusable else 1, "x_node")

    # ---- arc variables; arcs that cannot fit inside the time bounds are fixed off
    for u, v in arcs:
        e = inst.edge(u, v)
        dead = u in unusable or v in unusable
        if opts.tighten_bounds:
            dead = dead or m.var(f"t.{u}").lower + e.time > m.var(f"t.{v}").upper
        m.add_var(f"e.{u}.{v}", 0, 0 if dead else 1, "e_edge")

    def t(a):
        return m.index(f"t.{a}")

    def B(a):
        return m.index(f"B.{a}")

    def E(u, v):
        return m.index(f"e.{u}.{v}")

    scale = opts.big_m_scale

    def switched(cond, coeffs, rhs, tag):
        M = compute_big_m(m, coeffs, rhs) * scale
        gadget_implication(m, cond, coeffs, rhs, M=M, tag=tag)

    # ---- (a), (b) degree constraints
    outs, ins = {}, {}
    for u, v in arcs:
        outs.setdefault(u, []).append(E(u, v))
        ins.setdefault(v, []).append(E(u, v))
    for node in inst.nodes:
        a = node.id
        role = node_role(node)
        o = {i: 1 for i in outs.get(a, [])}
        n_in = {i: 1 for i in ins.get(a, [])}
        if role == "objective":
            for row, tag in ((o, "degree_out"), (n_in, "degree_in")):
                if not row:
                    raise ModelError(f"node {a}: objective node has no usable arcs")
                m.add_constraint(row, 1, 1, tag=tag)
        elif role == "start":
            if not o:
                raise ModelError(f"node {a}: start node has no outgoing arcs")
            m.add_constraint(o, 1, 1, tag="degree_out")
        elif role == "end":
            if not n_in:
                raise ModelError(f"node {a}: end node has no incoming arcs")
            m.add_constraint(n_in, 1, 1, tag="degree_in")
        else:
            x = m.index(f"x.{a}")
            m.add_constraint({**o, x: -1}, 0, 0, tag="intermediate_out")
            m.add_constraint({**n_in, x: -1}, 0, 0, tag="intermediate_in")

    # mandatory edges: exactly one traversal over all arcs derived from the original edge
    groups = {}
    for u, v in arcs:
        if inst.edge(u, v).mandatory:
            groups.setdefault(edge_group(inst, u, v), []).append(E(u, v))
    for key, ids in sorted(groups.items()):
        m.add_constraint({i: 1 for i in ids}, 1, 1, tag="mandatory_edge")

    # ---- (c)-(f) per-arc propagation
    for u, v in arcs:
        e = inst.edge(u, v)
        cond = E(u, v)
        if m.variables[cond].upper == 0:
            continue
        # t_v >= t_u + T_uv
        switched(cond, {t(u): 1, t(v): -1}, -e.time, "time")
        nu = inst.node(u)
        if nu.has("recharge"):
            rate = inst.recharge_rate(u)
            # B_v <= B_u + rate * wait - B_uv, wait = t_v - t_u - T_uv
            switched(cond, {B(v): 1, B(u): -1, t(v): -rate, t(u): rate}, -e.battery - rate * e.time, "recharge")
            # B_u + rate * wait <= cap
            switched(cond, {B(u): 1, t(v): rate, t(u): -rate}, inst.battery_cap(u) + rate * e.time, "recharge_cap")
        else:
            hov = inst.hover_rate(u)
            switched(cond, {B(v): 1, B(u): -1, t(v): hov, t(u): -hov}, -e.battery + hov * e.time, "battery")
        if use_q and not inst.node(v).has("recharge"):
            Q = lambda a: m.index(f"Q.{a}")
            switched(cond, {Q(v): 1, Q(u): -1}, -nu.q, "quantity")
        for k in range(r):
            du, dv = m.index(f"D.{u}.{k}"), m.index(f"D.{v}.{k}")
            if m.variables[du].fixed and m.variables[dv].fixed:
                if m.variables[du].lower != m.variables[dv].lower:
                    m.variables[cond].upper = 0
                continue
            gadget_implication(m, cond, {dv: 1, du: -1}, 0, M=1, tag="drone_id")
            gadget_implication(m, cond, {du: 1, dv: -1}, 0, M=1, tag="drone_id")

    # ---- (h) crash avoidance between flagged edge pairs
    if opts.crash:
        arc_set = set(arcs)
        for idx, (p, q) in enumerate(inst.crash_pairs):
            s1 = {E(x, y): 1 for x, y in (p, p[::-1]) if (x, y) in arc_set}
            s2 = {E(x, y): 1 for x, y in (q, q[::-1]) if (x, y) in arc_set}
            if not s1 or not s2:
                continue
            y = gadget_product(m, s1, s2, name=f"y.{idx}", tag="crash_product")
            b = m.add_var(f"b.{idx}", 0, 1, "b_disjunct")
            first = [(u, w) for u in p for w in q]  # edge p entirely before edge q
            for sel, pairs in ((0, first), (1, [(w, u) for u, w in first])):
                for before, after in pairs:
                    coeffs = {t(before): 1, t(after): -1}
                    M = compute_big_m(m, coeffs, 0) * scale
                    switched_leq(m, coeffs, 0, [(y, 1), (b, sel)], M=M, tag="crash")

    # ---- (j) objective
    if opts.objective == "makespan":
        ends = [t(n.id) for n in inst.nodes if n.has("end")]
        if ends:
            T = gadget_min_max(m, ends, name="T")
            m.set_objective({T: 1})
    else:
        m.set_objective({E(u, v): inst.edge(u, v).battery for u, v in arcs})

    m.meta = {"instance": inst, "arcs": arcs, "opts": opts}
    return m


def fix_partial(model: MilpModel, assignments: dict) -> MilpModel:
    """Copy of the model with variables fixed (int) or bounds tightened ((lo, hi))."""
    out = model.copy()
    for name, val in assignments.items():
        v = out.var(name)
        lo, hi = (val, val) if not isinstance(val, tuple) else val
        if lo < v.lower or hi > v.upper or lo > hi:
            raise ModelError(f"{name}: [{lo}, {hi}] lies outside declared bounds [{v.lower}, {v.upper}]")
        v.lower, v.upper = int(lo), int(hi)
    return out


def infeasible_rows(model: MilpModel) -> list:
    """Rows whose activity range over the current bounds cannot meet the row bounds."""
    bad = []
    for c in model.constraints:
        lo, hi = model.activity_range(c.coeffs)
        if hi < c.lower or lo > c.upper:
            bad.append(c)
    return bad
