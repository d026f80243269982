import json

import numpy as np
import pytest

from droneq import data_path
from droneq.cli import main
from droneq.milp import FormulationOptions, build_milp, load_lp, rewrite_bases
from droneq.instance import load_instance
from droneq.qubo import load_qubo, milp_to_qubo, qubo_energy

TOY = data_path("toy_mission.json")
TSP6 = data_path("tsp6.json")


def test_solve_toy(tmp_path):
    out = tmp_path / "run"
    assert main(["solve", "--instance", TOY, "--out", str(out), "--recharge-copies", "1", "--seed", "0"]) == 0
    routes = json.loads((out / "routes.json").read_text())
    assert routes["makespan"] == 17 and routes["run"]["seed"] == 0
    assert routes["routes"][0]["battery"][-1] == 0
    assert json.loads((out / "validation.json").read_text())["valid"]
    svg = (out / "routes.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg
    assert main(["validate", "--instance", TOY, "--routes", str(out / "routes.json")]) == 0


def test_solve_byte_identical(tmp_path):
    args = ["solve", "--instance", TOY, "--recharge-copies", "1", "--restarts", "200", "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == main(args + ["--out", str(tmp_path / "b")])
    for name in ("routes.json", "validation.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err


def test_infeasible_exit_1(tmp_path):
    out = tmp_path / "inf"
    assert main(["solve", "--instance", TOY, "--out", str(out), "--recharge-copies", "0", "--restarts", "5"]) == 1
    rep = json.loads((out / "validation.json").read_text())
    assert not rep["valid"] and rep["violations"]


def test_usage_errors(tmp_path):
    assert main([]) == 2
    assert main(["qswap", "--strategy", "bogus"]) == 2
    assert main(["solve", "--instance", TOY, "--lambda", "oops", "--out", str(tmp_path)]) == 2
    assert main(["vqe", "--n", "1", "--out", str(tmp_path)]) == 2


def test_validate_catches_bad_routes(tmp_path):
    bad = {"makespan": 10, "routes": [{"drone": 0, "nodes": ["A_start", "B", "A_end"], "times": [0, 2, 4]}],
           "pipeline": {"recharge_copies": 1}}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert main(["validate", "--instance", TOY, "--routes", str(p)]) == 1


def test_export_round_trip(tmp_path):
    out = tmp_path / "ex"
    assert main(["export", "--instance", TOY, "--out", str(out), "--recharge-copies", "1",
                 "--lambda", "time=25"]) == 0
    model = build_milp(rewrite_bases(load_instance(TOY), 1), FormulationOptions())
    back = load_lp(out / "model.lp")
    assert [v.name for v in back.variables] == [v.name for v in model.variables]
    q = load_qubo(out / "model.qubo", out / "model.qubo.decode.json", model=back)
    ref = milp_to_qubo(model, {"time": 25})
    assert np.array_equal(q.Q, ref.Q) and q.lambdas["time"] == 25
    lines = (out / "model.qubo").read_text().splitlines()
    assert len(lines) == np.count_nonzero(np.triu(ref.Q)) + 1
    bits = np.random.default_rng(0).integers(0, 2, q.n)
    assert qubo_energy(q, bits) == qubo_energy(ref, bits)


def test_qswap_outputs(tmp_path):
    for strat in ("1swap", "both", "mutations"):
        assert main(["qswap", "--instance", TSP6, "--strategy", strat, "--steps", "30", "--seed", "2",
                     "--out", str(tmp_path)]) == 0
    text = (tmp_path / "qswap_mutations.csv").read_text()
    assert "# seed=2" in text
    rows = [l.split(",") for l in text.splitlines() if not l.startswith("#")][1:]
    ar = [float(r[2]) for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(ar, ar[1:]))
    best = json.loads((tmp_path / "qswap_mutations_best.json").read_text())
    assert best["run"]["seed"] == 2 and best["optimal"]["cost"] == pytest.approx(best["h_min"])
    assert (tmp_path / "qswap_both.svg").exists()


def test_qswap_byte_identical(tmp_path):
    args = ["qswap", "--instance", TSP6, "--strategy", "both", "--steps", "10"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("qswap_both.csv", "qswap_both_best.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_qswap_zero_steps(tmp_path):
    assert main(["qswap", "--instance", TSP6, "--steps", "0", "--out", str(tmp_path)]) == 0
    rows = [l for l in (tmp_path / "qswap_mutations.csv").read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 2


def test_vqe_n3(tmp_path, capsys):
    assert main(["vqe", "--n", "3", "--seed", "1", "--out", str(tmp_path)]) == 0
    best = json.loads((tmp_path / "vqe_best.json").read_text())
    assert best["best_ar"] == pytest.approx(1, abs=1e-6) and best["n_params"] == 3
    assert "3 parameters" in capsys.readouterr().out
    assert (tmp_path / "vqe_trace.csv").read_text().startswith("# ")


def test_vqe_reports_twelve_parameters(tmp_path, capsys):
    main(["vqe", "--instance", TSP6, "--restarts", "1", "--maxiter", "50", "--out", str(tmp_path)])
    assert "12 parameters" in capsys.readouterr().out
