"""Permutations of {0..n-1}: enumeration, ranking, involutions and the V(sigma, tau) action.

A permutation p is read as a route: node p[t] is visited at time step t.
V(sigma, tau) permutes time steps by sigma and node labels by tau:
(V p)[t] = tau[p[sigma[t]]].
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_N = 8


def is_involution(p) -> bool:
    p = np.asarray(p)
    return bool(np.array_equal(p[p], np.arange(len(p))))


def transposition(n: int, i: int, j: int) -> np.ndarray:
    p = np.arange(n)
    p[i], p[j] = j, i
    return p


def cayley_distance(p, q) -> int:
    """n minus the number of cycles of p^-1 q (minimum transpositions turning p into q)."""
    p, q = np.asarray(p), np.asarray(q)
    inv = np.argsort(p)
    r = inv[q]
    seen = np.zeros(len(r), dtype=bool)
    cycles = 0
    for i in range(len(r)):
        if not seen[i]:
            cycles += 1
            j = i
            while not seen[j]:
                seen[j] = True
                j = r[j]
    return len(r) - cycles


@lru_cache(maxsize=None)
def involutions(n: int, movable: tuple = None) -> tuple:
    """Every involution of {0..n-1} that fixes the points outside `movable`."""
    pts = list(range(n)) if movable is None else list(movable)
    out = []

    def rec(rest, p):
        if not rest:
            out.append(tuple(p))
            return
        a, tail = rest[0], rest[1:]
        rec(tail, p)  # a stays fixed
        for k, b in enumerate(tail):
            p[a], p[b] = b, a
            rec(tail[:k] + tail[k + 1:], p)
            p[a], p[b] = a, b

    rec(pts, list(range(n)))
    return tuple(np.array(p) for p in out)


def random_involution(n: int, rng, movable=None) -> np.ndarray:
    """A random partial matching on the movable points (cycle lengths <= 2)."""
    pts = np.array(list(range(n)) if movable is None else list(movable))
    pts = pts[rng.permutation(len(pts))]
    k = int(rng.integers(0, len(pts) // 2 + 1))
    p = np.arange(n)
    for a, b in zip(pts[: 2 * k : 2], pts[1 : 2 * k : 2]):
        p[a], p[b] = b, a
    return p


def _lehmer_rank(perms: np.ndarray) -> np.ndarray:
    perms = np.atleast_2d(perms)
    m = perms.shape[1]
    if m == 0:
        return np.zeros(len(perms), dtype=np.int64)
    smaller_after = (perms[:, None, :] < perms[:, :, None]) & np.triu(np.ones((m, m), dtype=bool), 1)[None]
    digits = smaller_after.sum(axis=2)
    fact = np.array([math.factorial(m - 1 - i) for i in range(m)], dtype=np.int64)
    return digits @ fact


@dataclass(frozen=True)
class PermutationSpace:
    """All permutations of n in lexicographic (Lehmer) order, optionally with node 0 fixed at time 0."""
    n: int
    fix_first: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.n > MAX_N:
            raise ValueError(f"n = {self.n} exceeds the cap of {MAX_N}")

    @property
    def perms(self) -> np.ndarray:
        return _perms(self.n, self.fix_first)

    @property
    def size(self) -> int:
        return math.factorial(self.n - 1 if self.fix_first else self.n)

    @property
    def movable(self) -> tuple:
        """Points sigma and tau may move without leaving the space."""
        return tuple(range(1, self.n)) if self.fix_first else tuple(range(self.n))

    def rank(self, perms) -> np.ndarray:
        perms = np.atleast_2d(np.asarray(perms))
        if self.fix_first:
            if np.any(perms[:, 0] != 0):
                raise ValueError("permutation leaves the fixed-first subspace")
            return _lehmer_rank(perms[:, 1:] - 1)
        return _lehmer_rank(perms)

    def index(self, perm) -> int:
        return int(self.rank(perm)[0])

    def action(self, sigma, tau) -> np.ndarray:
        """idx with V|p_k> = |p_idx[k]>."""
        return _action(self.n, self.fix_first, tuple(int(v) for v in sigma), tuple(int(v) for v in tau))


@lru_cache(maxsize=16)
def _perms(n: int, fix_first: bool) -> np.ndarray:
    if fix_first:
        rest = np.array(list(itertools.permutations(range(1, n))), dtype=np.int64).reshape(-1, n - 1)
        out = np.hstack([np.zeros((len(rest), 1), dtype=np.int64), rest])
    else:
        out = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=4096)
def _action(n, fix_first, sigma, tau) -> np.ndarray:
    space = PermutationSpace(n, fix_first)
    sig, ta = np.array(sigma), np.array(tau)
    P = space.perms
    moved = ta[P[:, sig]]
    idx = space.rank(moved)
    idx.setflags(write=False)
    return idx
