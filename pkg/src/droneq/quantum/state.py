"""State vectors on the permutation subspace, the tour-cost Hamiltonian and the two gate families."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .space import PermutationSpace, is_involution

NORM_TOL = 1e-10


@dataclass(frozen=True)
class SwapPair:
    sigma: np.ndarray  # acts on time steps
    tau: np.ndarray  # acts on node labels

    def __post_init__(self):
        s, t = np.asarray(self.sigma, dtype=np.int64), np.asarray(self.tau, dtype=np.int64)
        if s.shape != t.shape:
            raise ValueError("sigma and tau must have the same length")
        if sorted(s.tolist()) != list(range(len(s))) or sorted(t.tolist()) != list(range(len(t))):
            raise ValueError("sigma and tau must be permutations")
        if not (is_involution(s) and is_involution(t)):
            raise ValueError("sigma and tau must be involutions")
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "tau", t)

    @classmethod
    def identity(cls, n: int) -> "SwapPair":
        return cls(np.arange(n), np.arange(n))

    def is_identity(self) -> bool:
        n = len(self.sigma)
        return bool(np.array_equal(self.sigma, np.arange(n)) and np.array_equal(self.tau, np.arange(n)))

    def label(self) -> tuple:
        return " ".join(map(str, self.sigma)), " ".join(map(str, self.tau))


@dataclass(frozen=True)
class TspHamiltonian:
    """Diagonal cost: entry p is the cyclic tour length sum_t d[p[t], p[t+1 mod n]]."""
    space: PermutationSpace
    d: np.ndarray
    costs: np.ndarray

    @classmethod
    def build(cls, d, fix_first: bool = False) -> "TspHamiltonian":
        d = np.asarray(d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if np.any(d < 0):
            raise ValueError("distances must be non-negative")
        space = PermutationSpace(d.shape[0], fix_first)
        P = space.perms
        costs = d[P, np.roll(P, -1, axis=1)].sum(axis=1)
        costs.setflags(write=False)
        return cls(space, d, costs)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def h_min(self) -> float:
        return float(self.costs.min())

    @property
    def h_max(self) -> float:
        return float(self.costs.max())

    def tour_cost(self, tour) -> float:
        tour = np.asarray(tour)
        return float(self.d[tour, np.roll(tour, -1)].sum())


@dataclass(frozen=True)
class PermutationState:
    space: PermutationSpace
    amps: np.ndarray

    @property
    def n(self) -> int:
        return self.space.n

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def uniform_superposition(n: int, fix_first: bool = False, cap: int = 8) -> PermutationState:
    if n < 2:
        raise ValueError("need n >= 2")
    if n > cap:
        raise ValueError(f"n = {n} exceeds the simulator cap {cap}")
    space = PermutationSpace(n, fix_first)
    return PermutationState(space, np.full(space.size, 1 / math.sqrt(space.size), dtype=np.complex128))


def basis_state(space: PermutationSpace, perm) -> PermutationState:
    amps = np.zeros(space.size, dtype=np.complex128)
    amps[space.index(perm)] = 1.0
    return PermutationState(space, amps)


def _check(state: PermutationState, H: TspHamiltonian):
    if state.space != H.space:
        raise ValueError("state and Hamiltonian live on different spaces")


def apply_phase(state: PermutationState, H: TspHamiltonian, delta: float) -> PermutationState:
    """e^{i delta H}."""
    _check(state, H)
    return PermutationState(state.space, state.amps * np.exp(1j * delta * H.costs))


def apply_vswap(state: PermutationState, pair: SwapPair, theta: float) -> PermutationState:
    """e^{i theta V} = cos(theta) I + i sin(theta) V, valid because V is an involution."""
    idx = state.space.action(pair.sigma, pair.tau)
    amps = math.cos(theta) * state.amps + 1j * math.sin(theta) * state.amps[idx]
    return PermutationState(state.space, amps)


def expectation(state: PermutationState, H: TspHamiltonian) -> float:
    _check(state, H)
    return float(state.probabilities() @ H.costs)


def average_ratio(state: PermutationState, H: TspHamiltonian) -> float:
    if H.h_min <= 0:
        raise ValueError("average ratio needs a positive minimum cost")
    return expectation(state, H) / H.h_min


def default_delta(H: TspHamiltonian) -> float:
    """Scale the cost spectrum into (0, pi]."""
    return math.pi / H.h_max if H.h_max > 0 else 0.0


def canonical_tour(perm) -> tuple:
    """Rotation of a cyclic tour that starts at node 0."""
    perm = list(perm)
    k = perm.index(0)
    return tuple(perm[k:] + perm[:k])


def sample_routes(state: PermutationState, H: TspHamiltonian, shots: int, rng) -> list:
    """Born-rule samples as (tour starting at node 0, cost), sorted by cost."""
    p = state.probabilities()
    picks = rng.choice(len(p), size=shots, p=p / p.sum())
    out = [(canonical_tour(state.space.perms[k]), float(H.costs[k])) for k in picks]
    out.sort(key=lambda t: (t[1], t[0]))
    return out
