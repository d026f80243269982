"""Exhaustive QUBO minimization by Gray-code enumeration."""
from __future__ import annotations

import time

import numba
import numpy as np

from ..qubo import Qubo, decode, qubo_energy
from .anneal import SolveResult

MAX_BITS = 26


@numba.njit(cache=True)
def _gray_min(Q):
    n = Q.shape[0]
    x = np.zeros(n, dtype=np.int8)
    field = np.zeros(n)  # sum_{j != i} Q_ij x_j
    e = 0.0
    best_e = 0.0
    best_code = 0
    code = 0
    for k in range(1, 1 << n):
        i = 0
        while not (k >> i) & 1:
            i += 1
        h = Q[i, i] + 2.0 * field[i]
        if x[i]:
            e -= h
            d = -1.0
        else:
            e += h
            d = 1.0
        x[i] = 1 - x[i]
        code ^= 1 << i
        for j in range(n):
            if j != i:
                field[j] += d * Q[j, i]
        if e < best_e:
            best_e = e
            best_code = code
    return best_code, best_e


def brute_force(q: Qubo, max_bits: int = MAX_BITS) -> SolveResult:
    if q.n > max_bits:
        raise ValueError(f"brute force limited to {max_bits} bits, QUBO has {q.n}")
    t0 = time.perf_counter()
    if q.n == 0:
        bits = np.zeros(0, dtype=np.int64)
    else:
        code, _ = _gray_min(np.asarray(q.Q, dtype=np.float64))
        bits = np.array([(code >> i) & 1 for i in range(q.n)], dtype=np.int64)
    e = qubo_energy(q, bits)
    feasible = not decode(q, bits)[1] if q.model is not None else True
    return SolveResult(bits, e, feasible, [e], [e], time.perf_counter() - t0, 1)
