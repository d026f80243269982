import json

import numpy as np
import pytest

from droneq import data_path
from droneq.instance import instance_from_dict, load_instance, load_tsp
from droneq.milp import FormulationOptions, build_milp, rewrite_bases


@pytest.fixture(scope="session")
def toy():
    return load_instance(data_path("toy_mission.json"))


@pytest.fixture(scope="session")
def toy_rw(toy):
    return rewrite_bases(toy, 1)


@pytest.fixture(scope="session")
def toy_model(toy_rw):
    return build_milp(toy_rw, FormulationOptions())


@pytest.fixture(scope="session")
def tsp6():
    return load_tsp(data_path("tsp6.json"))


@pytest.fixture(scope="session")
def tsp7():
    return load_tsp(data_path("tsp7.json"))


@pytest.fixture
def toy_dict():
    with open(data_path("toy_mission.json")) as fh:
        return json.load(fh)


def mission(nodes, edges, drones, t_max=20, crash=()):
    """Compact instance builder: edges as (a, b, time, battery[, mandatory])."""
    return instance_from_dict({
        "nodes": [{"id": n, "kinds": k} if isinstance(k, list) else {"id": n, **k} for n, k in nodes],
        "edges": [{"a": e[0], "b": e[1], "time": e[2], "battery": e[3],
                   "mandatory": bool(e[4]) if len(e) > 4 else False} for e in edges],
        "drones": [{"id_bits": "", "b_hov": 0, "q_max": 0, "b_recharge": 0, **d} for d in drones],
        "crash_pairs": [list(map(list, c)) for c in crash],
        "t_max": t_max,
    })


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    status = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in name or rep.when not in ("call", "setup"):
                continue
            num = int(name.split("test_criterion_")[1].split("_")[0])
            ok = rep.outcome == "passed" and status.get(num, True)
            if rep.when == "call" or not ok:
                status[num] = ok
    if not status:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(status):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if status[num] else 'FAIL'}")
