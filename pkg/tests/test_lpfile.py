import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from droneq.milp import load_lp, read_lp, save_lp, write_lp

from generators import random_milp


def same_model(a, b):
    assert [(v.name, v.lower, v.upper, v.role) for v in a.variables] == [
        (v.name, v.lower, v.upper, v.role) for v in b.variables
    ]
    assert [(c.coeffs, c.lower, c.upper, c.tag, c.name) for c in a.constraints] == [
        (c.coeffs, c.lower, c.upper, c.tag, c.name) for c in b.constraints
    ]
    assert a.objective == b.objective and a.objective_offset == b.objective_offset


def test_toy_round_trip(toy_model, tmp_path):
    p = tmp_path / "toy.lp"
    save_lp(toy_model, p)
    back = load_lp(p)
    same_model(toy_model, back)
    assert write_lp(back) == p.read_text()


def test_tags_are_comments(toy_model):
    text = write_lp(toy_model)
    body = text.split("subject to\n")[1].split("bounds\n")[0].splitlines()
    assert len(body) == len(toy_model.constraints)
    assert all(" \\ " in line for line in body)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_random_round_trip(seed):
    m = random_milp(np.random.default_rng(seed))
    same_model(m, read_lp(write_lp(m)))
