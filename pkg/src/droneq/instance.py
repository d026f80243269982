"""Mission-planning problem data: nodes, edges, drones and their JSON file format.

All numeric quantities are integers in scaled units so that the MILP and
QUBO coefficients derived from them stay exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

NODE_KINDS = ("objective", "intermediate", "start", "end", "recharge")


class InstanceError(ValueError):
    """Raised when an instance file is malformed or violates an invariant."""


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kinds: frozenset
    q: int = 0
    capabilities: int = 0
    time_window: Optional[tuple] = None
    pos: Optional[tuple] = None
    # set by base rewriting: which drone owns this copy and which base it came from
    owner: Optional[int] = None
    origin: Optional[str] = None

    def has(self, kind: str) -> bool:
        return kind in self.kinds


@dataclass(frozen=True)
class EdgeSpec:
    time: int
    battery: int
    mandatory: bool = False


@dataclass(frozen=True)
class DroneSpec:
    id_bits: str
    b_max: int
    b_hov: int
    q_max: int
    b_recharge: int
    base: str

    def has_capability(self, bit: int) -> bool:
        return bit < len(self.id_bits) and self.id_bits[bit] == "1"


def edge_key(a: str, b: str) -> tuple:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class MissionInstance:
    nodes: tuple
    edges: dict
    drones: tuple
    crash_pairs: tuple = ()
    t_max: int = 0
    rewritten: bool = False
    _index: dict = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> NodeSpec:
        return self._index[node_id]

    def __contains__(self, node_id) -> bool:
        return node_id in self._index

    @property
    def node_ids(self) -> list:
        return [n.id for n in self.nodes]

    def edge(self, a: str, b: str) -> Optional[EdgeSpec]:
        return self.edges.get(edge_key(a, b))

    def nodes_of_kind(self, kind: str) -> list:
        return [n for n in self.nodes if kind in n.kinds]

    def start_node(self, drone: int) -> str:
        return self._owned(drone, "start")

    def end_node(self, drone: int) -> str:
        return self._owned(drone, "end")

    def _owned(self, drone: int, kind: str) -> str:
        if not self.rewritten:
            return self.drones[drone].base
        for n in self.nodes:
            if n.owner == drone and kind in n.kinds:
                return n.id
        raise KeyError(f"drone {drone} has no {kind} node")

    def canonical(self) -> dict:
        """Order-independent view used for equality checks and round trips."""
        return {
            "nodes": sorted((_node_to_json(n) for n in self.nodes), key=lambda d: d["id"]),
            "edges": sorted(
                (k[0], k[1], e.time, e.battery, e.mandatory)
                for k, e in self.edges.items()
            ),
            "drones": [_drone_to_json(d) for d in self.drones],
            "crash_pairs": sorted(
                tuple(sorted((edge_key(*p), edge_key(*q)))) for p, q in self.crash_pairs
            ),
            "t_max": self.t_max,
        }

    # parameters the shared-node constraints use when the visiting drone is not known
    def hover_rate(self, node_id: str) -> int:
        owner = self.node(node_id).owner
        if owner is not None:
            return self.drones[owner].b_hov
        return max((d.b_hov for d in self.drones), default=0)

    def recharge_rate(self, node_id: str) -> int:
        owner = self.node(node_id).owner
        if owner is not None:
            return self.drones[owner].b_recharge
        return min((d.b_recharge for d in self.drones), default=0)

    def battery_cap(self, node_id: str) -> int:
        """Upper bound on battery at a node; shared recharge nodes use the smallest tank."""
        node = self.node(node_id)
        if node.owner is not None:
            return self.drones[node.owner].b_max
        caps = [d.b_max for d in self.drones]
        if not caps:
            return 0
        return min(caps) if node.has("recharge") else max(caps)

    def quantity_cap(self, node_id: str) -> int:
        node = self.node(node_id)
        if node.owner is not None:
            return self.drones[node.owner].q_max
        caps = [d.q_max for d in self.drones]
        if not caps:
            return 0
        return min(caps) if node.has("recharge") else max(caps)

    @property
    def uses_quantity(self) -> bool:
        return any(n.q > 0 for n in self.nodes)


@dataclass(frozen=True)
class TspInstance:
    d: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InstanceError("distance matrix must be square")
        if not np.allclose(d, d.T):
            raise InstanceError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0):
            raise InstanceError("distance matrix must have a zero diagonal")
        if np.any(d < 0):
            raise InstanceError("distances must be non-negative")
        object.__setattr__(self, "d", d)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(d))))

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @classmethod
    def from_coordinates(cls, coords, labels=()) -> "TspInstance":
        pts = np.asarray(coords, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        return cls(np.sqrt((diff ** 2).sum(-1)), tuple(labels))


# ---------------------------------------------------------------- validation


def validate_instance(inst: MissionInstance) -> MissionInstance:
    """Check every invariant; raise InstanceError naming the first violation."""
    if not inst.nodes:
        raise InstanceError("instance has no nodes")
    seen = set()
    for n in inst.nodes:
        if not n.id or "." in n.id or " " in n.id:
            raise InstanceError(f"node id {n.id!r} must be non-empty without '.' or spaces")
        if n.id in seen:
            raise InstanceError(f"duplicate node id {n.id!r}")
        seen.add(n.id)
        if not n.kinds:
            raise InstanceError(f"node {n.id} has an empty kind set")
        bad = set(n.kinds) - set(NODE_KINDS)
        if bad:
            raise InstanceError(f"node {n.id} has unknown kinds {sorted(bad)}")
        if n.q < 0 or n.capabilities < 0:
            raise InstanceError(f"node {n.id} has a negative quantity or capability mask")
        if n.time_window is not None:
            lo, hi = n.time_window
            if lo > hi or lo < 0:
                raise InstanceError(f"node {n.id} has an invalid time window {n.time_window}")
    for (a, b), e in inst.edges.items():
        if a not in seen or b not in seen:
            raise InstanceError(f"edge ({a},{b}) references an unknown node")
        if a == b:
            raise InstanceError(f"edge ({a},{b}) is a self loop")
        if (a, b) != edge_key(a, b):
            raise InstanceError(f"edge ({a},{b}) is not stored under its canonical key")
        if e.time < 0:
            raise InstanceError(f"edge ({a},{b}) has negative time {e.time}")
        if e.battery < 0:
            raise InstanceError(f"edge ({a},{b}) has negative battery cost {e.battery}")
    widths = {len(d.id_bits) for d in inst.drones}
    if len(widths) > 1:
        raise InstanceError("all drones must carry id_bits of the same length")
    if len(inst.drones) > 1 and len({d.id_bits for d in inst.drones}) < len(inst.drones):
        raise InstanceError("drones must carry distinct id_bits")
    r = widths.pop() if widths else 0
    for i, d in enumerate(inst.drones):
        if set(d.id_bits) - {"0", "1"}:
            raise InstanceError(f"drone {i} id_bits must be a binary string")
        if d.b_max <= 0:
            raise InstanceError(f"drone {i} must have b_max > 0")
        if min(d.b_hov, d.q_max, d.b_recharge) < 0:
            raise InstanceError(f"drone {i} has a negative rate or capacity")
        if not inst.rewritten:
            if d.base not in seen:
                raise InstanceError(f"drone {i} base {d.base!r} is not a node")
            base = inst.node(d.base)
            if not (base.has("start") and base.has("end")):
                raise InstanceError(f"drone {i} base {d.base} must be both a start and an end node")
    for n in inst.nodes:
        if n.capabilities >> r:
            raise InstanceError(f"node {n.id} requires capability bits beyond id width {r}")
    bases = {d.base for d in inst.drones}
    for p, q in inst.crash_pairs:
        for a, b in (p, q):
            if inst.edge(a, b) is None:
                raise InstanceError(f"crash pair references missing edge ({a},{b})")
            touches_base = {a, b} & bases if not inst.rewritten else {
                x for x in (a, b) if inst.node(x).owner is not None
            }
            if touches_base:
                raise InstanceError(f"crash pair edge ({a},{b}) touches a base node")
    if inst.t_max < 0:
        raise InstanceError("t_max must be non-negative")
    return inst


# ---------------------------------------------------------------- JSON I/O


def _node_to_json(n: NodeSpec) -> dict:
    out = {"id": n.id, "kinds": sorted(n.kinds), "q": n.q, "capabilities": n.capabilities}
    if n.time_window is not None:
        out["time_window"] = list(n.time_window)
    if n.pos is not None:
        out["pos"] = list(n.pos)
    return out


def _drone_to_json(d: DroneSpec) -> dict:
    return {
        "id_bits": d.id_bits,
        "b_max": d.b_max,
        "b_hov": d.b_hov,
        "q_max": d.q_max,
        "b_recharge": d.b_recharge,
        "base": d.base,
    }


def _int(value, what):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(f"{what} must be an integer, got {value!r}")
    return value


def instance_from_dict(data: dict) -> MissionInstance:
    try:
        nodes = []
        for raw in data["nodes"]:
            tw = raw.get("time_window")
            nodes.append(
                NodeSpec(
                    id=str(raw["id"]),
                    kinds=frozenset(raw["kinds"]),
                    q=_int(raw.get("q", 0), "q"),
                    capabilities=_int(raw.get("capabilities", 0), "capabilities"),
                    time_window=None if tw is None else (_int(tw[0], "time_window"), _int(tw[1], "time_window")),
                    pos=None if raw.get("pos") is None else tuple(float(v) for v in raw["pos"]),
                )
            )
        edges = {}
        for raw in data["edges"]:
            a, b = str(raw["a"]), str(raw["b"])
            key = edge_key(a, b)
            if key in edges:
                raise InstanceError(f"duplicate edge ({a},{b})")
            edges[key] = EdgeSpec(
                _int(raw["time"], "edge time"),
                _int(raw["battery"], "edge battery"),
                bool(raw.get("mandatory", False)),
            )
        drones = tuple(
            DroneSpec(
                id_bits=str(raw.get("id_bits", "")),
                b_max=_int(raw["b_max"], "b_max"),
                b_hov=_int(raw.get("b_hov", 0), "b_hov"),
                q_max=_int(raw.get("q_max", 0), "q_max"),
                b_recharge=_int(raw.get("b_recharge", 0), "b_recharge"),
                base=str(raw["base"]),
            )
            for raw in data["drones"]
        )
        crash = tuple(
            ((str(p[0]), str(p[1])), (str(q[0]), str(q[1])))
            for p, q in data.get("crash_pairs", [])
        )
        t_max = _int(data["t_max"], "t_max")
    except (KeyError, TypeError, IndexError) as exc:
        raise InstanceError(f"malformed instance: {exc!r}") from exc
    inst = MissionInstance(tuple(nodes), edges, drones, crash, t_max)
    return validate_instance(inst)


def instance_to_dict(inst: MissionInstance) -> dict:
    return {
        "nodes": [_node_to_json(n) for n in inst.nodes],
        "edges": [
            {"a": a, "b": b, "time": e.time, "battery": e.battery, "mandatory": e.mandatory}
            for (a, b), e in inst.edges.items()
        ],
        "drones": [_drone_to_json(d) for d in inst.drones],
        "crash_pairs": [[list(p), list(q)] for p, q in inst.crash_pairs],
        "t_max": inst.t_max,
    }


def load_instance(path) -> MissionInstance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)


def save_instance(inst: MissionInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


# ---------------------------------------------------------------- TSP bridge


def tsp_from_mission(inst: MissionInstance) -> TspInstance:
    """Distance matrix over the base (index 0) and the objective nodes, from edge times."""
    if len(inst.drones) != 1:
        raise InstanceError("TSP needs exactly one drone")
    if inst.rewritten:
        raise InstanceError("TSP conversion expects the original (not rewritten) instance")
    drone = inst.drones[0]
    if inst.crash_pairs:
        raise InstanceError("TSP cannot express crash constraints")
    others = [n for n in inst.nodes if n.id != drone.base]
    for n in inst.nodes:
        if n.q or n.capabilities or n.time_window is not None:
            raise InstanceError(f"node {n.id} uses resources, capabilities or time windows")
    for n in others:
        if set(n.kinds) != {"objective"}:
            raise InstanceError(f"node {n.id} is not a plain objective node")
    if any(e.mandatory for e in inst.edges.values()):
        raise InstanceError("TSP cannot express mandatory edges")
    order = [drone.base] + [n.id for n in others]
    k = len(order)
    d = np.zeros((k, k))
    for i, a in enumerate(order):
        for j, b in enumerate(order):
            if i == j:
                continue
            e = inst.edge(a, b)
            if e is None:
                raise InstanceError(f"TSP needs a complete graph; edge ({a},{b}) missing")
            d[i, j] = e.time
    # any tour uses k edges, so the battery limit is inactive if the k costliest fit
    costs = sorted((e.battery for e in inst.edges.values()), reverse=True)
    if k > 1 and sum(costs[:k]) > drone.b_max:
        raise InstanceError("battery limit may bind; TSP cannot express it")
    return TspInstance(d, tuple(order))


def mission_from_coordinates(coords, scale: int = 100, labels: Iterable = ()) -> MissionInstance:
    """Single-drone mission over points; edge times are rounded scaled Euclidean distances.

    The first point is the base.
    """
    pts = np.asarray(coords, dtype=float)
    labels = list(labels) or ["BASE"] + [f"n{i}" for i in range(len(pts) - 1)]
    nodes = [NodeSpec(labels[0], frozenset({"start", "end"}), pos=tuple(pts[0]))]
    nodes += [NodeSpec(lab, frozenset({"objective"}), pos=tuple(p)) for lab, p in zip(labels[1:], pts[1:])]
    edges = {}
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            t = int(round(scale * math.dist(pts[i], pts[j])))
            edges[edge_key(labels[i], labels[j])] = EdgeSpec(t, 0)
    drone = DroneSpec("", b_max=1, b_hov=0, q_max=0, b_recharge=0, base=labels[0])
    t_max = int(sum(sorted((e.time for e in edges.values()), reverse=True)[: len(pts)]))
    return validate_instance(MissionInstance(tuple(nodes), edges, (drone,), (), t_max))


def with_nodes(inst: MissionInstance, keep: Iterable[str]) -> MissionInstance:
    """Sub-instance restricted to the given node ids (edges and crash pairs filtered)."""
    keep = set(keep)
    nodes = tuple(n for n in inst.nodes if n.id in keep)
    edges = {k: e for k, e in inst.edges.items() if k[0] in keep and k[1] in keep}
    crash = tuple(
        (p, q) for p, q in inst.crash_pairs if set(p) <= keep and set(q) <= keep
    )
    return replace(inst, nodes=nodes, edges=edges, crash_pairs=crash)


def load_tsp(path) -> TspInstance:
    """TSP from JSON: {"coordinates": [[x, y], ...]} or {"distances": [[...]]}
    (optional "labels"), or a single-drone mission file."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: not valid JSON ({exc})") from exc
    labels = tuple(data.get("labels", ())) if isinstance(data, dict) else ()
    if "coordinates" in data:
        return TspInstance.from_coordinates(data["coordinates"], labels)
    if "distances" in data:
        return TspInstance(np.asarray(data["distances"], dtype=float), labels)
    if "nodes" in data:
        return tsp_from_mission(instance_from_dict(data))
    raise InstanceError(f"{path}: expected 'coordinates', 'distances' or a mission instance")
