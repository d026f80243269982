import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from droneq.quantum import (
    PermutationSpace,
    SwapPair,
    TspHamiltonian,
    apply_phase,
    apply_vswap,
    average_ratio,
    basis_state,
    default_delta,
    expectation,
    f_theta,
    fit_pair,
    fit_sinusoid,
    involutions,
    is_involution,
    qswap_step,
    random_involution,
    run_qswap,
    sample_routes,
    strategy_mutations,
    strategy_random_1swap,
    strategy_random_both,
    transposition,
    uniform_superposition,
)
from droneq.quantum.qswap import best_value, sinusoid
from droneq.quantum.state import PermutationState, canonical_tour

# asymmetric triangle: 0->1->2->0 costs 3, the reverse direction costs 15
TRIANGLE = np.array([[0, 1, 5], [5, 0, 1], [1, 5, 0]], dtype=float)


def tour_cost(d, tour):
    return sum(d[tour[t], tour[(t + 1) % len(tour)]] for t in range(len(tour)))


def random_state(n, rng, fix_first=False):
    space = PermutationSpace(n, fix_first)
    a = rng.normal(size=space.size) + 1j * rng.normal(size=space.size)
    return PermutationState(space, a / np.linalg.norm(a))


def random_pair(n, rng, fix_first=False):
    mov = PermutationSpace(n, fix_first).movable
    return SwapPair(random_involution(n, rng, mov), random_involution(n, rng, mov))


def random_h(n, rng, fix_first=False):
    d = rng.uniform(1, 10, (n, n))
    d = d + d.T
    np.fill_diagonal(d, 0)
    return TspHamiltonian.build(d, fix_first)


# ---------------------------------------------------------------- states


def test_uniform_examples():
    s = uniform_superposition(3)
    assert s.amps.shape == (6,) and np.allclose(s.amps, 1 / math.sqrt(6))
    assert uniform_superposition(6).amps.shape == (720,)
    assert abs(uniform_superposition(5).norm() - 1) < 1e-12
    with pytest.raises(ValueError):
        uniform_superposition(9)
    with pytest.raises(ValueError):
        uniform_superposition(1)


def test_fixed_first_space():
    s = uniform_superposition(5, fix_first=True)
    assert s.amps.shape == (24,)
    assert all(p[0] == 0 for p in s.space.perms)


def test_lehmer_index_round_trip():
    space = PermutationSpace(5)
    for k, p in enumerate(space.perms):
        assert space.index(p) == k


def test_phase_examples(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    s = uniform_superposition(6)
    assert np.allclose(apply_phase(s, H, 0.0).amps, s.amps)
    rng = np.random.default_rng(1)
    r = random_state(6, rng)
    for delta in (0.3, default_delta(H), 2.0):
        assert abs(expectation(apply_phase(r, H, delta), H) - expectation(r, H)) < 1e-9
    angles = default_delta(H) * H.costs
    assert np.all(angles > 0) and np.all(angles <= math.pi + 1e-12)


def test_vswap_examples():
    rng = np.random.default_rng(2)
    s = random_state(4, rng)
    pair = random_pair(4, rng)
    assert np.allclose(apply_vswap(s, pair, 0.0).amps, s.amps)
    idx = s.space.action(pair.sigma, pair.tau)
    assert np.allclose(apply_vswap(s, pair, math.pi / 2).amps, 1j * s.amps[idx])
    th = 0.7
    assert np.allclose(apply_vswap(s, SwapPair.identity(4), th).amps, np.exp(1j * th) * s.amps)


def test_action_semantics():
    """Route p visits p[t] at time t; sigma permutes time steps, tau relabels nodes."""
    space = PermutationSpace(4)
    sigma, tau = transposition(4, 0, 1), transposition(4, 2, 3)
    idx = space.action(sigma, tau)
    for k, p in enumerate(space.perms):
        expect = [tau[p[sigma[t]]] for t in range(4)]
        assert list(space.perms[idx[k]]) == expect


def test_non_involution_rejected():
    with pytest.raises(ValueError):
        SwapPair(np.array([1, 2, 0]), np.arange(3))


def test_expectation_examples(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    brute = np.mean([tour_cost(tsp6.d, p) for p in itertools.permutations(range(6))])
    assert abs(expectation(uniform_superposition(6), H) - brute) < 1e-9
    p = (3, 1, 0, 5, 2, 4)
    assert abs(expectation(basis_state(H.space, p), H) - tour_cost(tsp6.d, p)) < 1e-12


def test_average_ratio_examples(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    costs = [tour_cost(tsp6.d, p) for p in itertools.permutations(range(6))]
    best = H.space.perms[int(np.argmin(H.costs))]
    assert abs(average_ratio(basis_state(H.space, best), H) - 1) < 1e-12
    assert abs(average_ratio(uniform_superposition(6), H) - np.mean(costs) / min(costs)) < 1e-12
    zero = TspHamiltonian.build(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        average_ratio(uniform_superposition(3), zero)


def test_reference_tour_is_optimal(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    lab = list(tsp6.labels)
    tour = [lab.index(x) for x in ["B", "2", "0", "1", "4", "3"]]
    assert abs(H.tour_cost(tour) - H.h_min) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10_000), st.floats(-4, 4), st.booleans())
def test_norm_and_involution_identity(n, seed, theta, fix_first):
    rng = np.random.default_rng(seed)
    s = random_state(n, rng, fix_first)
    pair = random_pair(n, rng, fix_first)
    H = random_h(n, rng, fix_first)
    out = apply_vswap(s, pair, theta)
    assert abs(out.norm() - 1) < 1e-10
    assert abs(apply_phase(s, H, theta).norm() - 1) < 1e-10
    assert np.allclose(apply_vswap(out, pair, -theta).amps, s.amps, atol=1e-10)
    assert average_ratio(s, H) >= 1 - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10_000))
def test_expectation_on_sampled_basis_state(n, seed):
    rng = np.random.default_rng(seed)
    H = random_h(n, rng)
    p = rng.permutation(n)
    assert expectation(basis_state(H.space, p), H) == tour_cost(H.d, p)


# ---------------------------------------------------------------- sinusoid fit


def test_fit_examples():
    A, B, phi, th = fit_sinusoid(3, 2, 1)
    assert (A, B, phi) == (2, 1, 0) and abs(th - math.pi / 2) < 1e-15
    assert sinusoid(A, B, phi, th) == pytest.approx(1)
    assert fit_sinusoid(4, 4, 4) == (4, 0.0, 0.0, 0.0)


@given(st.floats(-50, 50), st.floats(0.01, 20), st.floats(-math.pi + 1e-6, math.pi - 1e-6))
def test_fit_round_trip(A, B, phi):
    f = [sinusoid(A, B, phi, t) for t in (0, math.pi / 4, math.pi / 2)]
    a, b, p, th = fit_sinusoid(*f)
    assert abs(a - A) < 1e-9 and abs(b - B) < 1e-9
    assert abs(math.remainder(p - phi, 2 * math.pi)) < 1e-9
    assert abs(sinusoid(a, b, p, th) - (A - B)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10_000))
def test_sinusoid_law(n, seed):
    rng = np.random.default_rng(seed)
    s, pair, H = random_state(n, rng), random_pair(n, rng), random_h(n, rng)
    A, B, phi, _ = fit_pair(s, H, pair)
    for th in np.linspace(0, math.pi, 8, endpoint=False):
        assert abs(f_theta(s, H, pair, th) - sinusoid(A, B, phi, th)) < 1e-9


# ---------------------------------------------------------------- Q-SWAP


def test_identity_strategy_keeps_expectation(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    s = uniform_superposition(6)
    out, pair, th, e = qswap_step(s, H, default_delta(H), lambda st, h, r: SwapPair.identity(6),
                                  np.random.default_rng(0))
    assert abs(e - expectation(s, H)) < 1e-9


def test_triangle_best_pair_strictly_decreases():
    H = TspHamiltonian.build(TRIANGLE)
    s = uniform_superposition(3)
    phased = apply_phase(s, H, default_delta(H))
    pairs = [SwapPair(np.array(a), np.array(b)) for a in involutions(3) for b in involutions(3)]
    best = min(pairs, key=lambda p: best_value(phased, H, p))
    _, _, _, e = qswap_step(s, H, default_delta(H), lambda st, h, r: best, np.random.default_rng(0))
    assert e < expectation(s, H) - 1e-6


def test_mutations_trace_monotone(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    run = run_qswap(H, 20, "mutations", seed=3, patience=100)
    e = [r["expectation"] for r in run.rows]
    assert all(b <= a + 1e-9 for a, b in zip(e, e[1:]))
    assert e[-1] < e[0]


def test_zero_steps_is_uniform(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    run = run_qswap(H, 0, "1swap")
    assert len(run.rows) == 1
    assert run.ar_trace[0] == pytest.approx(average_ratio(uniform_superposition(6), H))


def test_one_swap_single_sample():
    rng = np.random.default_rng(0)
    H = random_h(5, rng)
    s = random_state(5, rng)
    pair = strategy_random_1swap(s, H, 1, rng)
    assert np.array_equal(pair.tau, np.arange(5))
    assert sum(pair.sigma != np.arange(5)) == 2


def test_one_swap_exhaustive():
    rng = np.random.default_rng(4)
    H = random_h(5, rng)
    s = apply_phase(random_state(5, rng), H, 0.4)
    pair = strategy_random_1swap(s, H, 100, rng)
    ident = np.arange(5)
    best = min(best_value(s, H, SwapPair(transposition(5, i, j), ident))
               for i, j in itertools.combinations(range(5), 2))
    assert abs(best_value(s, H, pair) - best) < 1e-12


def test_one_swap_moves_off_worst_tour():
    H = TspHamiltonian.build(TRIANGLE)
    worst = H.space.perms[int(np.argmax(H.costs))]
    s = basis_state(H.space, worst)
    pair = strategy_random_1swap(s, H, 3, np.random.default_rng(0))
    assert best_value(s, H, pair) < H.h_max
    target = H.space.perms[H.space.action(pair.sigma, pair.tau)[H.space.index(worst)]]
    assert H.tour_cost(target) < H.h_max


def test_both_rounds_zero_is_initial_pair():
    rng_h = np.random.default_rng(5)
    H = random_h(5, rng_h)
    s = random_state(5, rng_h)
    pair = strategy_random_both(s, H, 0, np.random.default_rng(9))
    rng = np.random.default_rng(9)
    mov = s.space.movable
    assert np.array_equal(pair.sigma, random_involution(5, rng, mov))
    assert np.array_equal(pair.tau, random_involution(5, rng, mov))


def test_both_never_worse_than_start():
    rng_h = np.random.default_rng(6)
    H = random_h(5, rng_h)
    s = apply_phase(random_state(5, rng_h), H, 0.3)
    for seed in range(5):
        start = strategy_random_both(s, H, 0, np.random.default_rng(seed))
        final = strategy_random_both(s, H, 3, np.random.default_rng(seed))
        assert best_value(s, H, final) <= best_value(s, H, start) + 1e-12


def test_mutations_local_minimum_and_descent():
    rng = np.random.default_rng(8)
    H = random_h(5, rng)
    s = apply_phase(random_state(5, rng), H, 0.3)
    start = random_pair(5, rng)
    end = strategy_mutations(s, H, rng, start=start)
    assert best_value(s, H, end) <= best_value(s, H, start)
    again = strategy_mutations(s, H, rng, start=end)
    assert np.array_equal(again.sigma, end.sigma) and np.array_equal(again.tau, end.tau)


def test_random_involutions_are_involutions():
    rng = np.random.default_rng(0)
    for n in range(2, 9):
        for _ in range(20):
            assert is_involution(random_involution(n, rng))
    assert len(involutions(4)) == 10


def test_qswap_csv(tsp6, tmp_path):
    H = TspHamiltonian.build(tsp6.d)
    run = run_qswap(H, 5, "both", seed=1)
    p = tmp_path / "trace.csv"
    run.write_csv(p)
    lines = [l for l in p.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "step,expectation,AR,strategy,sigma,tau,theta_star"
    assert len(lines) == len(run.rows) + 1


def test_early_stop():
    H = TspHamiltonian.build(TRIANGLE)
    run = run_qswap(H, 200, "mutations", seed=0, patience=5)
    assert len(run.rows) - 1 < 200


# ---------------------------------------------------------------- sampling


def test_sampling_basis_state():
    H = TspHamiltonian.build(TRIANGLE)
    s = basis_state(H.space, [1, 2, 0])
    out = sample_routes(s, H, 50, np.random.default_rng(0))
    assert {t for t, _ in out} == {canonical_tour([1, 2, 0])}


def test_sampling_uniform_chi_square():
    H = TspHamiltonian.build(np.ones((4, 4)) - np.eye(4))
    s = uniform_superposition(4)
    p = s.probabilities()
    picks = np.random.default_rng(0).choice(len(p), size=100_000, p=p / p.sum())
    counts = np.bincount(picks, minlength=len(p))
    assert chisquare(counts).pvalue > 1e-3
    tours = sample_routes(s, H, 1000, np.random.default_rng(1))
    assert all(t[0] == 0 for t, _ in tours) and tours == sorted(tours, key=lambda x: (x[1], x[0]))


def test_qswap_sampling_beats_uniform(tsp6):
    H = TspHamiltonian.build(tsp6.d)
    wins = 0
    for seed in range(10):
        run = run_qswap(H, 30, "mutations", seed=seed)
        after = sample_routes(run.state, H, 20, np.random.default_rng(seed))[0][1]
        before = sample_routes(uniform_superposition(6), H, 20, np.random.default_rng(seed))[0][1]
        wins += after <= before
    assert wins >= 9
