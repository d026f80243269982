"""Brute-force route enumeration, independent of the MILP.

Walks every simple start-to-end node sequence per drone with every integer
waiting pattern, and judges candidates with ``validate_routes``. Only meant
for tiny instances (a handful of nodes, small t_max).
"""
from __future__ import annotations

import itertools
from typing import Iterator, Optional

from ..instance import MissionInstance
from .build import arc_allowed
from .routes import Route, RouteSet, validate_routes


def _sequences(inst: MissionInstance, drone: int) -> Iterator[list]:
    start, end = inst.start_node(drone), inst.end_node(drone)
    ids = inst.node_ids

    def rec(path):
        u = path[-1]
        if u == end:
            yield list(path)
            return
        for v in ids:
            if v not in path and arc_allowed(inst, u, v):
                path.append(v)
                yield from rec(path)
                path.pop()

    yield from rec([start])


def _timings(inst: MissionInstance, nodes: list) -> Iterator[list]:
    """Every integer time vector with t_0 = 0 and arrivals no earlier than travel allows."""
    legs = [inst.edge(u, v).time for u, v in zip(nodes[:-1], nodes[1:])]

    def rec(times, k):
        if k == len(legs):
            yield list(times)
            return
        earliest = times[-1] + legs[k]
        for t in range(earliest, inst.t_max + 1):
            times.append(t)
            yield from rec(times, k + 1)
            times.pop()

    yield from rec([0], 0)


def feasible_routes(inst: MissionInstance, drone: int) -> dict:
    """Node sequence -> list of time vectors that pass single-route validation."""
    out = {}
    for nodes in _sequences(inst, drone):
        ok = []
        for times in _timings(inst, nodes):
            r = RouteSet([Route(drone, nodes, times)])
            if validate_routes(inst, r, partial=True).ok:
                ok.append(times)
        if ok:
            out[tuple(nodes)] = ok
    return out


def _joint(inst, per_drone, choice) -> Optional[RouteSet]:
    seqs = [c[0] for c in choice]
    flat = [n for s in seqs for n in s]
    if len(flat) != len(set(flat)):
        return None
    pools = [per_drone[i][s] for i, s in enumerate(seqs)]
    for times in itertools.product(*pools):
        rs = RouteSet([Route(i, list(s), list(t)) for i, (s, t) in enumerate(zip(seqs, times))])
        if validate_routes(inst, rs).ok:
            return rs
        if not inst.crash_pairs:
            # timing only couples drones through crash rows; one try settles it
            return None
    return None


def enumerate_valid_routesets(inst: MissionInstance) -> dict:
    """Map from node-sequence set (frozenset of (drone, nodes)) to one valid witness RouteSet."""
    per_drone = [feasible_routes(inst, i) for i in range(len(inst.drones))]
    found = {}
    for choice in itertools.product(*[list(p.items()) for p in per_drone]):
        rs = _joint(inst, per_drone, choice)
        if rs is not None:
            found[rs.sequences()] = rs
    return found


def best_makespan(inst: MissionInstance) -> Optional[int]:
    """Smallest makespan over all valid route sets (earliest valid timing per sequence set)."""
    per_drone = [feasible_routes(inst, i) for i in range(len(inst.drones))]
    best = None
    for choice in itertools.product(*[list(p.items()) for p in per_drone]):
        seqs = [c[0] for c in choice]
        flat = [n for s in seqs for n in s]
        if len(flat) != len(set(flat)):
            continue
        pools = [sorted(per_drone[i][s], key=lambda t: t[-1]) for i, s in enumerate(seqs)]
        for times in itertools.product(*pools):
            span = max(t[-1] for t in times)
            if best is not None and span >= best:
                continue
            rs = RouteSet([Route(i, list(s), list(t)) for i, (s, t) in enumerate(zip(seqs, times))])
            if validate_routes(inst, rs).ok:
                best = span
    return best
