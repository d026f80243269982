"""Single-bit-flip simulated annealing for QUBOs (numba kernel, sparse local fields)."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from ..qubo import Qubo, decode, encode, qubo_energy


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int = 1000
    beta_start: Optional[float] = None  # None: derived from the QUBO's field magnitudes
    beta_end: Optional[float] = None
    restarts: int = 10
    seed: int = 0
    moves: str = "bit"  # "bit": flips on Q; "slack": flips on model bits with slacks kept optimal

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.moves not in ("bit", "slack"):
            raise ValueError(f"unknown move set {self.moves!r}")
        if self.beta_start is not None and self.beta_end is not None:
            if not 0 < self.beta_start <= self.beta_end:
                raise ValueError("need 0 < beta_start <= beta_end")


@dataclass
class SolveResult:
    best_bits: np.ndarray
    best_energy: float
    feasible: bool
    trace: list = field(default_factory=list)  # best-so-far energy after each restart
    restart_energies: list = field(default_factory=list)
    wall_time: float = 0.0
    restarts_done: int = 0


def _csr(Q: np.ndarray) -> tuple:
    off = np.array(Q, dtype=np.float64)
    diag = np.diag(off).copy()
    np.fill_diagonal(off, 0.0)
    rows, cols = np.nonzero(off)
    indptr = np.zeros(Q.shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return diag, indptr, cols.astype(np.int64), off[rows, cols]


def default_betas(Q: np.ndarray) -> tuple:
    """Hot enough to accept the largest single flip half the time, cold enough to freeze the smallest."""
    diag, indptr, idx, val = _csr(Q)
    n = len(diag)
    if n == 0:
        return 1.0, 1.0
    absval = np.abs(val)
    rowsum = np.zeros(n)
    np.add.at(rowsum, np.repeat(np.arange(n), np.diff(indptr)), 2 * absval)
    max_delta = float(np.max(np.abs(diag) + rowsum))
    cand = np.concatenate([np.abs(diag), 2 * absval])
    cand = cand[cand > 0]
    min_delta = float(cand.min()) if len(cand) else 1.0
    if max_delta == 0:
        return 1.0, 1.0
    b0 = math.log(2) / max_delta
    b1 = max(math.log(100) / min_delta, b0)
    return b0, b1


@numba.njit(cache=True)
def _anneal_one(diag, indptr, idx, val, betas, seed, init):
    np.random.seed(seed)
    n = diag.shape[0]
    x = np.zeros(n, dtype=np.int8)
    if init.shape[0] == n:
        for i in range(n):
            x[i] = init[i]
    else:
        for i in range(n):
            x[i] = 1 if np.random.random() < 0.5 else 0
    field = np.zeros(n)
    for i in range(n):
        if x[i]:
            for k in range(indptr[i], indptr[i + 1]):
                field[idx[k]] += val[k]
    e = 0.0
    for i in range(n):
        if x[i]:
            e += diag[i] + field[i]  # sum_j Q_ij x_j counted once per ordered pair
    best_e = e
    best_x = x.copy()
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(n):
            h = diag[i] + 2.0 * field[i]
            delta = -h if x[i] else h
            if delta <= 0.0 or np.random.random() < math.exp(-beta * delta):
                d = -1.0 if x[i] else 1.0
                x[i] = 1 - x[i]
                e += delta
                for k in range(indptr[i], indptr[i + 1]):
                    field[idx[k]] += d * val[k]
                if e < best_e:
                    best_e = e
                    best_x[:] = x
    return best_x, best_e


@numba.njit(cache=True)
def _dist(a, lo, hi):
    if a < lo:
        return lo - a
    if a > hi:
        return a - hi
    return 0.0


@numba.njit(cache=True)
def _anneal_slack(bvar, bw, vptr, vrow, vcoef, lo, hi, lam, cobj, lower, betas, seed, init):
    # energy = c.x + sum_r lam_r * dist(a_r x, [lo_r, hi_r])^2, which is the QUBO
    # energy with every slack block at its best value
    np.random.seed(seed)
    nb = bvar.shape[0]
    nv = lower.shape[0]
    nr = lo.shape[0]
    bits = np.zeros(nb, dtype=np.int8)
    val = lower.astype(np.float64).copy()
    for k in range(nb):
        b = init[k] if init.shape[0] == nb else (1 if np.random.random() < 0.5 else 0)
        if b:
            bits[k] = 1
            val[bvar[k]] += bw[k]
    act = np.zeros(nr)
    for v in range(nv):
        for p in range(vptr[v], vptr[v + 1]):
            act[vrow[p]] += vcoef[p] * val[v]
    e = 0.0
    for v in range(nv):
        e += cobj[v] * val[v]
    for r in range(nr):
        d = _dist(act[r], lo[r], hi[r])
        e += lam[r] * d * d
    best_e = e
    best = bits.copy()
    for s in range(betas.shape[0]):
        beta = betas[s]
        for k in range(nb):
            v = bvar[k]
            dv = -bw[k] if bits[k] else bw[k]
            de = cobj[v] * dv
            for p in range(vptr[v], vptr[v + 1]):
                r = vrow[p]
                d0 = _dist(act[r], lo[r], hi[r])
                d1 = _dist(act[r] + vcoef[p] * dv, lo[r], hi[r])
                de += lam[r] * (d1 * d1 - d0 * d0)
            if de <= 0.0 or np.random.random() < math.exp(-beta * de):
                bits[k] = 1 - bits[k]
                val[v] += dv
                e += de
                for p in range(vptr[v], vptr[v + 1]):
                    act[vrow[p]] += vcoef[p] * dv
                if e < best_e:
                    best_e = e
                    best[:] = bits
    return best, best_e


class _SlackProblem:
    """Row-wise view of the model behind a QUBO, for the slack-marginal move set."""

    def __init__(self, q: Qubo):
        m = q.model
        if m is None:
            raise ValueError("slack moves need the QUBO's source model")
        bvar, bw = [], []
        for vi, blk in enumerate(q.var_blocks):
            bvar += [vi] * len(blk.weights)
            bw += list(blk.weights)
        self.bvar = np.array(bvar, dtype=np.int64)
        self.bw = np.array(bw, dtype=np.float64)
        self.n_bits = len(bvar)
        rows = [[] for _ in m.variables]
        for r, c in enumerate(m.constraints):
            for i, a in c.coeffs.items():
                rows[i].append((r, a))
        self.vptr = np.cumsum([0] + [len(x) for x in rows]).astype(np.int64)
        self.vrow = np.array([r for x in rows for r, _ in x], dtype=np.int64)
        self.vcoef = np.array([a for x in rows for _, a in x], dtype=np.float64)
        self.lo = np.array([c.lower for c in m.constraints], dtype=np.float64)
        self.hi = np.array([c.upper for c in m.constraints], dtype=np.float64)
        self.lam = np.array([q.lambdas.get(c.tag, 1) for c in m.constraints], dtype=np.float64)
        self.cobj = np.zeros(m.n_vars)
        for i, a in m.objective.items():
            self.cobj[i] = a
        self.lower = m.lower
        self.q = q

    def betas(self) -> tuple:
        lam_max = float(self.lam.max()) if len(self.lam) else 1.0
        nz = [abs(c) for c in self.cobj if c] + ([float(self.lam.min())] if len(self.lam) else [])
        return 0.05 / lam_max, max(1.0 / min(nz) if nz else 1.0, 0.05 / lam_max)

    def run(self, betas, seed, init):
        return _anneal_slack(
            self.bvar, self.bw, self.vptr, self.vrow, self.vcoef, self.lo, self.hi,
            self.lam, self.cobj, self.lower, betas, seed, init,
        )

    def full_bits(self, model_bits) -> np.ndarray:
        x = np.array(self.lower, dtype=np.int64)
        np.add.at(x, self.bvar, (np.asarray(model_bits) * self.bw).astype(np.int64))
        return encode(self.q, x)


def restart_seeds(seed: int, count: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed)
    return np.array([int(s.generate_state(1, np.uint32)[0]) for s in ss.spawn(count)], dtype=np.int64)


def simulated_anneal(
    q: Qubo,
    sched: AnnealSchedule = AnnealSchedule(),
    time_limit: Optional[float] = None,
    init: Optional[np.ndarray] = None,
) -> SolveResult:
    """Best sample over seeded restarts; restart r uses the r-th child seed of `sched.seed`.

    With `init`, the first restart starts from that bitstring instead of a random one.
    """
    t0 = time.perf_counter()
    if sched.moves == "slack":
        prob = _SlackProblem(q)
        b0, b1 = prob.betas()
        if init is not None:
            init = np.asarray(init)[: prob.n_bits]  # variable bits come first
    else:
        diag, indptr, idx, val = _csr(q.Q)
        b0, b1 = default_betas(q.Q)
    b0 = sched.beta_start if sched.beta_start is not None else b0
    b1 = sched.beta_end if sched.beta_end is not None else max(b1, b0)
    betas = np.geomspace(b0, b1, sched.sweeps)
    seeds = restart_seeds(sched.seed, sched.restarts)
    empty = np.zeros(0, dtype=np.int8)
    best_bits, best_e = None, math.inf
    trace, per = [], []
    for r in range(sched.restarts):
        start = np.asarray(init, dtype=np.int8) if (r == 0 and init is not None) else empty
        if sched.moves == "slack":
            bits, _ = prob.run(betas, seeds[r], start)
            bits = prob.full_bits(bits)
        else:
            bits, _ = _anneal_one(diag, indptr, idx, val, betas, seeds[r], start)
        e = qubo_energy(q, bits)  # exact, independent of float accumulation
        per.append(e)
        if e < best_e:
            best_e, best_bits = e, bits.astype(np.int64)
        trace.append(best_e)
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            break
    if best_bits is None:
        best_bits, best_e = np.zeros(q.n, dtype=np.int64), qubo_energy(q, np.zeros(q.n))
    feasible = not decode(q, best_bits)[1] if q.model is not None else True
    return SolveResult(best_bits, best_e, feasible, trace, per, time.perf_counter() - t0, len(per))
