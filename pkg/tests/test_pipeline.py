import numpy as np
import pytest

from droneq import data_path
from droneq.instance import load_instance
from droneq.milp import FormulationOptions, build_milp, rewrite_bases, validate_routes
from droneq.milp.highs import solve_milp
from droneq.qubo import milp_to_qubo
from droneq.solvers import AnnealSchedule, PipelineConfig, PipelineError, decode_routes, simulated_anneal, solve_pipeline
from droneq.solvers.pipeline import penalty_weights

from conftest import mission


def test_single_drone_runs_steps_one_and_two(toy):
    res = solve_pipeline(toy, PipelineConfig(restarts=300, seed=1, recharge_copies=1))
    stages = [e["stage"] for e in res.log]
    assert stages == ["1.1", "1.2", "1.3"]
    assert validate_routes(res.instance, res.routes).ok


def test_step_two_never_lengthens(toy):
    for seed in range(3):
        res = solve_pipeline(toy, PipelineConfig(restarts=200, seed=seed))
        for e in res.log:
            if e["stage"].endswith(".2") and "cost_after" in e:
                assert e["cost_after"] <= e["cost_before"]


def test_deterministic(toy):
    cfg = PipelineConfig(restarts=100, seed=5, recharge_copies=1)
    a, b = solve_pipeline(toy, cfg), solve_pipeline(toy, cfg)
    assert a.routes.to_json() == b.routes.to_json() and a.log == b.log


def test_crash_pair_resolved_by_waiting():
    inst = load_instance(data_path("crash2.json"))
    for seed in range(3):
        res = solve_pipeline(inst, PipelineConfig(restarts=400, seed=seed))
        rep = validate_routes(res.instance, res.routes)
        assert rep.ok
        waits = [w for r in res.routes.routes for w in r.waits(res.instance)]
        assert max(waits) > 0
        assert res.log[-1]["stage"] == "5"


def test_infeasible_stage_reported(toy):
    with pytest.raises(PipelineError) as err:
        solve_pipeline(toy, PipelineConfig(restarts=10, recharge_copies=0))
    assert err.value.stage.startswith("1")


def test_pipeline_not_worse_than_full_model():
    """Paired runs under equal restart budgets on a 2-drone, 6-objective instance."""
    inst = load_instance(data_path("two_drones6.json"))
    rw = rewrite_bases(inst)
    model = build_milp(rw, FormulationOptions())
    assert solve_milp(model).objective == 15
    q = milp_to_qubo(model, penalty_weights(model, PipelineConfig()))
    wins = 0
    for seed in range(10):
        try:
            p = solve_pipeline(inst, PipelineConfig(restarts=200, seed=seed)).makespan
        except PipelineError:
            p = None
        r = simulated_anneal(q, AnnealSchedule(sweeps=1000, restarts=200, seed=seed, moves="slack"))
        d = decode_routes(rw, q, r.best_bits)
        full = d.routes.end_time if d.feasible else None
        if p is not None and (full is None or p <= full):
            wins += 1
        if p is not None:
            assert p >= 15
    assert wins >= 7
