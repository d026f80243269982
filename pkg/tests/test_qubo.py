import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from droneq.milp import MilpModel, Route, RouteSet, assignment_from_routes
from droneq.milp.model import VarSpec
from droneq.qubo import (
    auto_lambda,
    binary_expand,
    constraint_penalty,
    decode,
    encode,
    encode_value,
    expansion_weights,
    ising_energy,
    load_qubo,
    milp_to_qubo,
    qubo_energy,
    qubo_to_ising,
    save_qubo,
)
from droneq.solvers import decode_routes

from generators import all_bits, exhaustive_report, random_milp


def representable(weights):
    return sorted({sum(w * b for w, b in zip(weights, bits)) for bits in itertools.product((0, 1), repeat=len(weights))})


def test_expand_examples():
    assert binary_expand(VarSpec("a", 0, 1)) == [1]
    assert binary_expand(VarSpec("b", 0, 6)) == [1, 2, 3]
    assert representable([1, 2, 3]) == list(range(7))
    assert binary_expand(VarSpec("c", 3, 3)) == []


@given(st.integers(0, 300))
def test_expansion_covers_exact_range(span):
    w = expansion_weights(span)
    assert sum(w) == span
    if span <= 64:
        assert representable(w) == list(range(span + 1))
    for v in {0, span, span // 2, max(0, span - 1)}:
        assert sum(a * b for a, b in zip(w, encode_value(v, w))) == v


def test_expand_rejects_negative_span():
    with pytest.raises(ValueError):
        expansion_weights(-1)


def two_binaries():
    m = MilpModel()
    m.add_var("x", 0, 1, "x_node")
    m.add_var("y", 0, 1, "x_node")
    return m


def penalty_table(m, row):
    blocks = milp_to_qubo(m).var_blocks
    const, terms, slack = constraint_penalty(row, m, blocks, sum(len(b.weights) for b in blocks))
    width = sum(len(b.weights) for b in blocks) + (len(slack.weights) if slack else 0)
    out = {}
    for bits in itertools.product((0, 1), repeat=width):
        p = const + sum(c * bits[i] * bits[j] for (i, j), c in terms.items())
        out[bits] = p
    return out, slack


def test_penalty_one_hot_pair():
    m = two_binaries()
    row = m.add_constraint({0: 1, 1: 1}, 1, 1, tag="eq")
    table, slack = penalty_table(m, row)
    assert slack is None
    assert table == {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 1}


def test_penalty_x_le_zero():
    m = two_binaries()
    row = m.add_constraint({0: 1}, upper=0, tag="le")
    table, slack = penalty_table(m, row)
    assert slack is None  # the slack range collapses; penalty is x^2
    assert {k[0]: v for k, v in table.items()} == {0: 0, 1: 1}


def test_penalty_inequality_slack_gap():
    m = MilpModel()
    for i in range(3):
        m.add_var(f"x{i}", 0, 1, "x_node")
    row = m.add_constraint({0: 1, 1: 1, 2: 1}, upper=1, tag="le")
    table, slack = penalty_table(m, row)
    assert slack is not None
    best = {}
    for bits, p in table.items():
        best[bits[:3]] = min(best.get(bits[:3], p), p)
        assert p >= 0
    for x, p in best.items():
        assert (p == 0) == (sum(x) <= 1)
        assert p == 0 or p >= 1


def test_toy_degree_row_zero_set(toy_model):
    row = next(c for c in toy_model.constraints if c.tag == "degree_out" and
               toy_model.variables[next(iter(c.coeffs))].name.startswith("e.B."))
    idx = sorted(row.coeffs)
    m = MilpModel()
    for i in idx:
        m.add_var(toy_model.variables[i].name, 0, 1, "e_edge")
    sub = m.add_constraint({k: 1 for k in range(len(idx))}, 1, 1, tag="degree_out")
    table, _ = penalty_table(m, sub)
    zero = {bits for bits, p in table.items() if p == 0}
    assert zero == {bits for bits in table if sum(bits) == 1}


def test_no_constraints_gives_diagonal():
    m = MilpModel()
    m.add_var("a", 0, 3)
    m.add_var("b", 0, 1, "x_node")
    m.set_objective({0: 2, 1: -5}, 7)
    q = milp_to_qubo(m)
    assert np.array_equal(q.Q, np.diag([2, 4, -5]))
    assert q.offset == 7


def test_hand_computed_equality_lambda_10():
    m = two_binaries()
    m.add_constraint({0: 1, 1: 1}, 1, 1, tag="eq")
    q = milp_to_qubo(m, {"eq": 10})
    # 10 (x + y - 1)^2 = 10 (-x - y + 2xy + 1)
    assert np.array_equal(q.Q, np.array([[-10, 10], [10, -10]]))
    assert q.offset == 10


def test_auto_lambda_examples():
    m = MilpModel()
    t = m.add_var("T", 0, 17, "T_makespan")
    m.add_constraint({t: 1}, upper=10, tag="a")
    m.add_constraint({t: 1}, lower=2, tag="b")
    m.set_objective({t: 1})
    assert auto_lambda(m) == {"a": 18, "b": 18}
    m.set_objective({})
    assert set(auto_lambda(m).values()) == {1}


def test_toy_lambda_from_objective_range(toy_model):
    lo, hi = toy_model.objective_range()
    assert set(auto_lambda(toy_model).values()) == {hi - lo + 1}


def test_energy_basics():
    m = two_binaries()
    m.set_objective({0: 3, 1: -1}, 2)
    q = milp_to_qubo(m)
    assert qubo_energy(q, [0, 0]) == q.offset == 2
    assert qubo_energy(q, [1, 0]) == q.Q[0, 0] + q.offset
    with pytest.raises(ValueError):
        qubo_energy(q, [1, 0, 1])


def test_toy_route_encoding(toy_model, toy_rw):
    q = milp_to_qubo(toy_model)
    rs = RouteSet([Route(0, ["A_start", "B", "D", "A_rec", "C", "A_end"], [0, 2, 7, 9, 14, 17])], 17)
    x = assignment_from_routes(toy_model, rs)
    bits = encode(q, x)
    assert qubo_energy(q, bits) == 17
    back, residuals = decode(q, bits)
    assert np.array_equal(back, x) and residuals == {}
    dec = decode_routes(toy_rw, q, bits)
    assert dec.feasible and dec.routes.routes[0].nodes == rs.routes[0].nodes
    assert dec.routes.end_time == 17


def test_toy_qubo_size(toy_model):
    q = milp_to_qubo(toy_model)
    assert 100 <= q.n <= 400
    assert np.array_equal(q.Q, q.Q.T)
    assert all(b.stop - b.start == len(b.weights) for b in q.var_blocks)
    starts = [b.start for b in q.var_blocks]
    assert starts == sorted(starts)


def test_all_zero_bits_decode(toy_model, toy_rw):
    q = milp_to_qubo(toy_model)
    dec = decode_routes(toy_rw, q, np.zeros(q.n, dtype=np.int64))
    assert not dec.feasible
    assert "degree_out" in dec.residuals


def test_degree_violation_residual(toy_model):
    q = milp_to_qubo(toy_model)
    x = toy_model.vector({})
    x[toy_model.index("e.A_start.B")] = 1
    x[toy_model.index("e.A_start.C")] = 1
    _, res = decode(q, encode(q, x))
    assert res.get("degree_out", 0) > 0


def test_random_strings_decode_in_bounds(toy_model):
    q = milp_to_qubo(toy_model)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x, _ = decode(q, rng.integers(0, 2, q.n))
        assert toy_model.in_bounds(x)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_encode_decode_round_trip(seed):
    m = random_milp(np.random.default_rng(seed))
    q = milp_to_qubo(m)
    rng = np.random.default_rng(seed)
    x = np.array([rng.integers(v.lower, v.upper + 1) for v in m.variables])
    back, _ = decode(q, encode(q, x))
    assert np.array_equal(back, x)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_exactness_small(seed):
    m = random_milp(np.random.default_rng(seed), max_bits=12)
    q = milp_to_qubo(m)
    rep = exhaustive_report(q, m)
    assert rep["mismatch"] == 0 and rep["below"] == 0
    if rep["feasible_min"] is not None and rep["infeasible_min"] is not None:
        assert rep["infeasible_min"] >= rep["feasible_min"] + 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_ising_equivalence(seed):
    m = random_milp(np.random.default_rng(seed), max_bits=12)
    q = milp_to_qubo(m)
    h, J, c = qubo_to_ising(q.Q, q.offset)
    for _, B in all_bits(q.n):
        for bits in B:
            assert abs(ising_energy(h, J, c, 1 - 2 * bits) - qubo_energy(q, bits)) < 1e-9


def test_symmetry(toy_model):
    q = milp_to_qubo(toy_model, {"time": 3.5})
    assert not q.is_integer
    assert np.array_equal(q.Q, q.Q.T)


def test_file_round_trip(toy_model, tmp_path):
    q = milp_to_qubo(toy_model)
    p = tmp_path / "toy.qubo"
    save_qubo(q, p)
    lines = p.read_text().splitlines()
    assert len(lines) == np.count_nonzero(np.triu(q.Q)) + 1
    back = load_qubo(p, model=toy_model)
    assert np.array_equal(back.Q, q.Q) and back.offset == q.offset
    rng = np.random.default_rng(0)
    for _ in range(50):
        bits = rng.integers(0, 2, q.n)
        assert qubo_energy(back, bits) == qubo_energy(q, bits)
    assert back.decode_map() == q.decode_map()


def test_rejects_nonpositive_lambda(toy_model):
    with pytest.raises(ValueError):
        milp_to_qubo(toy_model, {"time": 0})
