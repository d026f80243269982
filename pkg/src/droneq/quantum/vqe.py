"""Sorting-network ansatz: one partial swap per comparator, trained on the exact tour-cost expectation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .space import PermutationSpace, transposition
from .state import PermutationState, SwapPair, TspHamiltonian, apply_vswap, basis_state, expectation

# comparator order follows the parameter order theta_0, theta_1, ...
_TABLES = {
    2: [(0, 1)],
    3: [(0, 2), (0, 1), (1, 2)],
    4: [(0, 1), (2, 3), (0, 2), (1, 3), (1, 2)],
    5: [(0, 3), (1, 4), (0, 2), (1, 3), (0, 1), (2, 4), (1, 2), (3, 4), (2, 3)],
    6: [(1, 3), (0, 5), (2, 4), (1, 2), (3, 4), (0, 3), (2, 5), (0, 1), (2, 3), (4, 5), (1, 2), (3, 4)],
}


@dataclass(frozen=True)
class SortingNetwork:
    n: int
    comparators: tuple

    @property
    def n_params(self) -> int:
        return len(self.comparators)

    def sort(self, values) -> list:
        a = list(values)
        for i, j in self.comparators:
            if a[i] > a[j]:
                a[i], a[j] = a[j], a[i]
        return a

    def sorts_all(self) -> bool:
        """Exhaustive check over all n! inputs."""
        target = list(range(self.n))
        return all(self.sort(p) == target for p in itertools.permutations(range(self.n)))


def batcher_network(n: int) -> list:
    """Odd-even merge sort on the next power of two, pruned to n wires."""
    N = 1
    while N < n:
        N *= 2
    pairs = []
    p = 1
    while p < N:
        k = p
        while k >= 1:
            for j in range(k % p, N - k, 2 * k):
                for i in range(min(k, N - j - k)):
                    if (i + j) // (2 * p) == (i + j + k) // (2 * p):
                        pairs.append((i + j, i + j + k))
            k //= 2
        p *= 2
    # wires >= n carry +inf and never swap
    return [(a, b) for a, b in pairs if b < n]


def minimal_sorting_network(n: int) -> SortingNetwork:
    if n < 2:
        raise ValueError("sorting networks need n >= 2")
    comps = _TABLES.get(n) or batcher_network(n)
    return SortingNetwork(n, tuple(comps))


@dataclass
class _Compiled:
    """Pre-resolved comparator actions for fast repeated evaluation."""
    space: PermutationSpace
    maps: list
    start: np.ndarray

    @classmethod
    def build(cls, net: SortingNetwork) -> "_Compiled":
        space = PermutationSpace(net.n)
        ident = np.arange(net.n)
        maps = [space.action(transposition(net.n, i, j), ident) for i, j in net.comparators]
        start = np.zeros(space.size, dtype=np.complex128)
        start[space.index(ident)] = 1.0
        return cls(space, maps, start)

    def amps(self, params) -> np.ndarray:
        a = self.start
        for idx, th in zip(self.maps, params):
            a = math.cos(th) * a + 1j * math.sin(th) * a[idx]
        return a


def vqe_apply(net: SortingNetwork, params) -> PermutationState:
    """Partial swaps in comparator order, starting from the identity route |0>|1>...|n-1>."""
    params = np.asarray(params, dtype=float)
    if params.shape != (net.n_params,):
        raise ValueError(f"expected {net.n_params} parameters, got {params.shape}")
    space = PermutationSpace(net.n)
    state = basis_state(space, np.arange(net.n))
    ident = np.arange(net.n)
    for (i, j), th in zip(net.comparators, params):
        state = apply_vswap(state, SwapPair(transposition(net.n, i, j), ident), float(th))
    return state


@dataclass(frozen=True)
class VqeConfig:
    restarts: int = 10
    method: str = "nelder-mead"  # or "gd"
    maxiter: int = 4000
    polish: int = 3  # simplex restarts from the incumbent within one run
    tol: float = 1e-10
    lr: float = 0.05  # gradient descent only
    fd_step: float = 1e-5


@dataclass
class VqeResult:
    params: np.ndarray
    ar: float
    trace: list = field(default_factory=list)  # AR at every evaluation, all restarts in order
    restart_ars: list = field(default_factory=list)
    restart_params: list = field(default_factory=list)


def vqe_optimize(net: SortingNetwork, H: TspHamiltonian, cfg: VqeConfig = VqeConfig(), rng=None) -> VqeResult:
    if H.n != net.n or H.space.fix_first:
        raise ValueError("VQE runs on the full permutation space of the network's size")
    rng = np.random.default_rng(0) if rng is None else rng
    comp = _Compiled.build(net)
    costs, hmin = H.costs, H.h_min
    trace = []

    def energy(theta):
        a = comp.amps(theta)
        e = float((np.abs(a) ** 2) @ costs)
        trace.append(e / hmin)
        return e

    best = None
    ars, plist = [], []
    for _ in range(cfg.restarts):
        x = rng.uniform(0, 2 * math.pi, net.n_params)
        if cfg.method == "nelder-mead":
            for _ in range(1 + cfg.polish):
                res = minimize(energy, x, method="Nelder-Mead",
                               options={"maxiter": cfg.maxiter, "xatol": 1e-9, "fatol": cfg.tol, "adaptive": True})
                x = res.x
        elif cfg.method == "gd":
            x = _gradient_descent(energy, x, cfg)
        else:
            raise ValueError(f"unknown optimizer {cfg.method!r}")
        e = energy(x)
        ars.append(e / hmin)
        plist.append(np.array(x))
        if best is None or e / hmin < best[1]:
            best = (np.array(x), e / hmin)
    return VqeResult(best[0], best[1], trace, ars, plist)


def _gradient_descent(f, x, cfg: VqeConfig):
    x = np.array(x, dtype=float)
    prev = f(x)
    for _ in range(cfg.maxiter):
        g = np.zeros_like(x)
        for k in range(len(x)):
            e = np.zeros_like(x)
            e[k] = cfg.fd_step
            g[k] = (f(x + e) - f(x - e)) / (2 * cfg.fd_step)
        x = x - cfg.lr * g
        cur = f(x)
        if abs(prev - cur) < cfg.tol:
            break
        prev = cur
    return x


def reachable_with_full_swaps(net: SortingNetwork) -> set:
    """Basis states reachable when every parameter is 0 or pi/2."""
    out = set()
    for bits in itertools.product((0.0, math.pi / 2), repeat=net.n_params):
        st = vqe_apply(net, np.array(bits))
        k = int(np.argmax(np.abs(st.amps)))
        if abs(abs(st.amps[k]) - 1) < 1e-9:
            out.add(tuple(st.space.perms[k]))
    return out
