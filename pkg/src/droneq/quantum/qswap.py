"""Q-SWAP: alternate e^{i delta H} with a rotation e^{i theta V(sigma, tau)} at its best angle.

For an involution V, f(theta) = <psi| e^{-i theta V} H e^{i theta V} |psi> is
A + B cos(2 theta - phi), so three evaluations (0, pi/4, pi/2) fix it and the
minimum A - B sits at theta* = (phi + pi) / 2.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .space import cayley_distance, involutions, random_involution, transposition
from .state import (
    PermutationState,
    SwapPair,
    TspHamiltonian,
    apply_phase,
    apply_vswap,
    average_ratio,
    default_delta,
    expectation,
    uniform_superposition,
)

STRATEGIES = ("1swap", "both", "mutations")


def fit_sinusoid(f0: float, f45: float, f90: float) -> tuple:
    """(A, B, phi, theta*) with f(theta) = A + B cos(2 theta - phi) and B >= 0."""
    A = (f0 + f90) / 2
    bc, bs = f0 - A, f45 - A
    B = math.hypot(bc, bs)
    if B < 1e-15:
        return A, 0.0, 0.0, 0.0
    phi = math.atan2(bs, bc)
    return A, B, phi, (phi + math.pi) / 2


def sinusoid(A, B, phi, theta):
    return A + B * np.cos(2 * np.asarray(theta) - phi)


def f_theta(state: PermutationState, H: TspHamiltonian, pair: SwapPair, theta: float) -> float:
    return expectation(apply_vswap(state, pair, theta), H)


def f_estimate(state, H, pair, theta, shots: int, rng) -> float:
    """Shot-noise estimate of f(theta) from Born samples of the rotated state."""
    p = apply_vswap(state, pair, theta).probabilities()
    picks = rng.choice(len(p), size=shots, p=p / p.sum())
    return float(H.costs[picks].mean())


def fit_pair(state, H, pair, shots: Optional[int] = None, rng=None) -> tuple:
    """Fitted (A, B, phi, theta*) for one pair; exact unless `shots` is given."""
    if shots is None:
        vals = [f_theta(state, H, pair, t) for t in (0.0, math.pi / 4, math.pi / 2)]
    else:
        vals = [f_estimate(state, H, pair, t, shots, rng) for t in (0.0, math.pi / 4, math.pi / 2)]
    return fit_sinusoid(*vals)


def best_value(state, H, pair, shots=None, rng=None) -> float:
    """Lowest f reachable with this pair, A - B."""
    A, B, _, _ = fit_pair(state, H, pair, shots, rng)
    return A - B


# ---------------------------------------------------------------- strategies


def strategy_random_1swap(state, H, samples: int, rng, shots=None) -> SwapPair:
    """tau = identity; best of `samples` distinct random transpositions of time steps."""
    pts = state.space.movable
    cands = [(a, b) for k, a in enumerate(pts) for b in pts[k + 1:]]
    if not cands:
        return SwapPair.identity(state.n)
    pick = rng.choice(len(cands), size=min(samples, len(cands)), replace=False)
    ident = np.arange(state.n)
    best, best_v = None, math.inf
    for k in pick:
        pair = SwapPair(transposition(state.n, *cands[k]), ident)
        v = best_value(state, H, pair, shots, rng)
        if v < best_v:
            best, best_v = pair, v
    return best


@lru_cache(maxsize=4096)
def _neighbours(n: int, movable: tuple, p: tuple, dist: int) -> tuple:
    return tuple(q for q in involutions(n, movable) if cayley_distance(p, q) == dist)


def strategy_random_both(state, H, rounds: int, rng, samples: int = 4, shots=None) -> SwapPair:
    """Random start pair, then alternate: try `samples` involutions at distance 2 for sigma, then tau."""
    n, mov = state.n, state.space.movable
    sigma, tau = random_involution(n, rng, mov), random_involution(n, rng, mov)
    cur = best_value(state, H, SwapPair(sigma, tau), shots, rng)
    for _ in range(rounds):
        for side in (0, 1):
            base = sigma if side == 0 else tau
            pool = _neighbours(n, mov, tuple(int(v) for v in base), 2)
            if not pool:
                continue
            for k in rng.choice(len(pool), size=min(samples, len(pool)), replace=False):
                cand = (pool[k], tau) if side == 0 else (sigma, pool[k])
                v = best_value(state, H, SwapPair(*cand), shots, rng)
                if v < cur:
                    cur = v
                    sigma, tau = np.array(cand[0]), np.array(cand[1])
            # the accepted point of this side is the base of the next side
    return SwapPair(sigma, tau)


def strategy_mutations(state, H, rng, start: Optional[SwapPair] = None, shots=None, max_moves: int = 1000) -> SwapPair:
    """Steepest descent over pairs one transposition away (add or drop a 2-cycle in sigma or tau)."""
    n, mov = state.n, state.space.movable
    if start is None:
        start = SwapPair(random_involution(n, rng, mov), random_involution(n, rng, mov))
    pair = start
    cur = best_value(state, H, pair, shots, rng)
    for _ in range(max_moves):
        best, best_v = None, cur
        s_key, t_key = tuple(int(v) for v in pair.sigma), tuple(int(v) for v in pair.tau)
        for s in _neighbours(n, mov, s_key, 1):
            cand = SwapPair(s, pair.tau)
            v = best_value(state, H, cand, shots, rng)
            if v < best_v:
                best, best_v = cand, v
        for t in _neighbours(n, mov, t_key, 1):
            cand = SwapPair(pair.sigma, t)
            v = best_value(state, H, cand, shots, rng)
            if v < best_v:
                best, best_v = cand, v
        if best is None:
            break
        pair, cur = best, best_v
    return pair


def make_strategy(name: str, samples: int = 10, rounds: int = 3, shots=None) -> Callable:
    if name == "1swap":
        return lambda s, H, rng: strategy_random_1swap(s, H, samples, rng, shots)
    if name == "both":
        return lambda s, H, rng: strategy_random_both(s, H, rounds, rng, shots=shots)
    if name == "mutations":
        return lambda s, H, rng: strategy_mutations(s, H, rng, shots=shots)
    raise ValueError(f"unknown strategy {name!r}; choose from {STRATEGIES}")


# ---------------------------------------------------------------- driver


def qswap_step(state, H, delta: float, strategy: Callable, rng, shots=None) -> tuple:
    """One layer: phase, choose a pair, rotate at its fitted best angle.

    Returns (new state, pair, theta*, new expectation).
    """
    phased = apply_phase(state, H, delta)
    pair = strategy(phased, H, rng)
    _, _, _, theta = fit_pair(phased, H, pair, shots, rng)
    out = apply_vswap(phased, pair, theta)
    return out, pair, theta, expectation(out, H)


@dataclass
class QswapRun:
    state: PermutationState
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def ar_trace(self) -> list:
        return [r["AR"] for r in self.rows]

    def write_csv(self, path) -> None:
        cols = ["step", "expectation", "AR", "strategy", "sigma", "tau", "theta_star"]
        with open(path, "w", newline="") as fh:
            for k, v in sorted(self.config.items()):
                fh.write(f"# {k}={v}\n")
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: (f"{r[k]:.12g}" if isinstance(r[k], float) else r[k]) for k in cols})


def run_qswap(
    H: TspHamiltonian,
    steps: int,
    strategy: str = "mutations",
    seed: int = 0,
    delta: Optional[float] = None,
    samples: int = 10,
    rounds: int = 3,
    shots: Optional[int] = None,
    patience: int = 5,
    min_gain: float = 1e-6,
) -> QswapRun:
    """Q-SWAP from the uniform state; stops after `steps` layers or once `patience`
    consecutive layers each gain less than `min_gain`."""
    rng = np.random.default_rng(seed)
    delta = default_delta(H) if delta is None else delta
    choose = make_strategy(strategy, samples, rounds, shots)
    state = uniform_superposition(H.n, H.space.fix_first)
    e = expectation(state, H)
    config = {"strategy": strategy, "steps": steps, "seed": seed, "delta": delta, "samples": samples,
              "rounds": rounds, "shots": shots, "patience": patience, "min_gain": min_gain,
              "fix_first": H.space.fix_first}
    rows = [{"step": 0, "expectation": e, "AR": e / H.h_min, "strategy": strategy, "sigma": "", "tau": "",
             "theta_star": 0.0}]
    gains = []
    for step in range(1, steps + 1):
        state, pair, theta, e_new = qswap_step(state, H, delta, choose, rng, shots)
        gains.append(e - e_new)
        e = e_new
        s, t = pair.label()
        rows.append({"step": step, "expectation": e, "AR": e / H.h_min, "strategy": strategy, "sigma": s,
                     "tau": t, "theta_star": float(theta)})
        if len(gains) >= patience and max(gains[-patience:]) < min_gain:
            break
    return QswapRun(state, rows, config)
