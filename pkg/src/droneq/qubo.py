"""MILP to QUBO compilation by bounded binary expansion and squared penalties.

Every integer variable x in [l, u] becomes l + sum_j w_j b_j with weights
1, 2, 4, ... and a residual last weight, so exactly the values l..u are
representable. Each row becomes a squared penalty, with a binary-expanded
slack for inequalities. Q is stored symmetric: the coefficient of b_i b_j
(i != j) in the energy is split evenly between Q[i, j] and Q[j, i].
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .milp.model import LinearConstraint, MilpModel, ModelError, VarSpec


def expansion_weights(span: int) -> list:
    """Weights for a variable ranging over span + 1 consecutive integers."""
    if span < 0:
        raise ModelError(f"negative span {span}")
    if span == 0:
        return []
    k = int(span).bit_length()
    weights = [1 << j for j in range(k - 1)]
    weights.append(span - ((1 << (k - 1)) - 1))
    return weights


def binary_expand(v: VarSpec) -> list:
    """Bit weights for a variable; value = lower + sum(w_j * b_j)."""
    if v.upper < v.lower:
        raise ModelError(f"variable {v.name}: upper {v.upper} < lower {v.lower}")
    return expansion_weights(int(v.upper - v.lower))


def encode_value(value: int, weights: list) -> list:
    """Bits representing `value` (offset from the lower bound) in the given expansion."""
    if not weights:
        if value != 0:
            raise ValueError(f"value {value} not representable with zero bits")
        return []
    span = sum(weights)
    if not 0 <= value <= span:
        raise ValueError(f"value {value} outside [0, {span}]")
    *powers, residual = weights
    head = (1 << len(powers)) - 1
    top = 0
    if value > head:
        top, value = 1, value - residual
    return [(value >> j) & 1 for j in range(len(powers))] + [top]


@dataclass
class BitBlock:
    """A run of consecutive bits encoding one integer quantity."""
    name: str
    lower: int
    start: int
    weights: list

    @property
    def stop(self) -> int:
        return self.start + len(self.weights)

    def value(self, bits) -> int:
        return self.lower + sum(w * int(bits[self.start + j]) for j, w in enumerate(self.weights))


@dataclass
class Qubo:
    Q: np.ndarray
    offset: float
    var_blocks: list  # one BitBlock per MILP variable, in model order
    slack_blocks: list = field(default_factory=list)  # BitBlock named after the row
    lambdas: dict = field(default_factory=dict)
    model: Optional[MilpModel] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def is_integer(self) -> bool:
        return self.Q.dtype.kind == "i"

    def decode_map(self) -> list:
        """bit index -> (variable or slack name, weight)."""
        out = [None] * self.n
        for blk in self.var_blocks + self.slack_blocks:
            for j, w in enumerate(blk.weights):
                out[blk.start + j] = (blk.name, w)
        return out

    def to_ising(self) -> tuple:
        return qubo_to_ising(self.Q, self.offset)


# ---------------------------------------------------------------- penalties


def _linear_in_bits(model: MilpModel, coeffs: dict, blocks: list) -> tuple:
    """Write c^T x as const + sum_k g_k b_k."""
    const, g = 0, {}
    for i, c in coeffs.items():
        blk = blocks[i]
        const += c * blk.lower
        for j, w in enumerate(blk.weights):
            g[blk.start + j] = g.get(blk.start + j, 0) + c * w
    return const, g


def constraint_penalty(row: LinearConstraint, model: MilpModel, blocks: list, slack_start: int):
    """Quadratic penalty for one row, as (constant, {(i, j): coeff} with i <= j, slack block or None).

    The penalty is zero exactly when the row holds for the decoded assignment
    and the slack takes its matching value, and at least one otherwise.
    """
    lo_act, hi_act = model.activity_range(row.coeffs)
    if not (math.isfinite(lo_act) and math.isfinite(hi_act)):
        raise ModelError(f"row {row.name} has an unbounded activity range")
    const, g = _linear_in_bits(model, row.coeffs, blocks)
    slack = None
    if row.is_equality:
        target = int(row.upper)
    else:
        lo = max(row.lower, lo_act)
        hi = min(row.upper, hi_act)
        if lo <= lo_act and hi >= hi_act:
            return 0, {}, None  # holds everywhere in the box
        if hi < lo:
            # unsatisfiable: penalize distance to the nearer violated bound
            target = int(row.upper) if math.isfinite(row.upper) else int(row.lower)
        elif hi == lo:
            target = int(hi)  # only one admissible activity: no slack bits needed
        else:
            lo, hi = int(lo), int(hi)
            slack = BitBlock(f"slack.{row.name}", 0, slack_start, expansion_weights(hi - lo))
            for j, w in enumerate(slack.weights):
                g[slack.start + j] = w
            target = hi
    # (const - target + sum g_k b_k)^2
    c0 = const - target
    terms = {}
    keys = sorted(g)
    for a, k in enumerate(keys):
        gk = g[k]
        if gk == 0:
            continue
        terms[(k, k)] = terms.get((k, k), 0) + 2 * c0 * gk + gk * gk
        for l in keys[a + 1:]:
            if g[l]:
                terms[(k, l)] = terms.get((k, l), 0) + 2 * gk * g[l]
    return c0 * c0, terms, slack


def auto_lambda(model: MilpModel) -> dict:
    """Per-family penalty weight: objective range over the box plus one."""
    lo, hi = model.objective_range()
    lam = int(hi - lo) + 1
    return {tag: lam for tag in model.tags()}


def _as_number(v):
    return int(v) if float(v).is_integer() else float(v)


def milp_to_qubo(model: MilpModel, lambdas: Optional[dict] = None) -> Qubo:
    """Q = diag(objective bits) + sum over rows of lambda[tag] * penalty."""
    lam = auto_lambda(model)
    for tag, v in (lambdas or {}).items():
        if v <= 0:
            raise ModelError(f"penalty weight for {tag} must be positive")
        lam[tag] = _as_number(v)
    blocks, pos = [], 0
    for v in model.variables:
        blk = BitBlock(v.name, int(v.lower), pos, binary_expand(v))
        blocks.append(blk)
        pos = blk.stop
    offset = model.objective_offset
    acc = {}
    const, g = _linear_in_bits(model, model.objective, blocks)
    offset += const
    for k, gk in g.items():
        acc[(k, k)] = acc.get((k, k), 0) + gk
    slacks = []
    for row in model.constraints:
        c, terms, slack = constraint_penalty(row, model, blocks, pos)
        if slack is not None:
            slacks.append(slack)
            pos = slack.stop
        w = lam.get(row.tag, 1)
        offset += w * c
        for key, val in terms.items():
            acc[key] = acc.get(key, 0) + w * val
    integral = all(float(x).is_integer() for x in list(acc.values()) + [offset])
    Q = np.zeros((pos, pos), dtype=np.int64 if integral else np.float64)
    for (i, j), val in acc.items():
        if i == j:
            Q[i, i] += val
        else:
            half = val // 2 if integral else val / 2
            Q[i, j] += half
            Q[j, i] += half
    offset = int(offset) if integral else float(offset)
    return Qubo(Q, offset, blocks, slacks, lam, model)


# ---------------------------------------------------------------- evaluation


def qubo_energy(q: Qubo, bits) -> float:
    x = np.asarray(bits, dtype=np.int64 if q.is_integer else np.float64)
    if x.shape != (q.n,):
        raise ValueError(f"expected {q.n} bits, got shape {x.shape}")
    e = x @ q.Q @ x + q.offset
    return int(e) if q.is_integer else float(e)


def decode(q: Qubo, bits) -> tuple:
    """(assignment vector, {tag: total violation}) for a bitstring."""
    bits = np.asarray(bits)
    if bits.shape != (q.n,):
        raise ValueError(f"expected {q.n} bits, got shape {bits.shape}")
    x = np.array([blk.value(bits) for blk in q.var_blocks], dtype=np.int64)
    residuals = {}
    if q.model is not None:
        for c in q.model.constraints:
            v = c.violation(x)
            if v:
                residuals[c.tag] = residuals.get(c.tag, 0) + v
    return x, residuals


def encode(q: Qubo, x) -> np.ndarray:
    """Bitstring for an in-bounds assignment, with each slack set to its best value."""
    bits = np.zeros(q.n, dtype=np.int64)
    for blk, val in zip(q.var_blocks, x):
        bits[blk.start:blk.stop] = encode_value(int(val) - blk.lower, blk.weights)
    if q.model is not None:
        rows = {f"slack.{c.name}": c for c in q.model.constraints}
        for blk in q.slack_blocks:
            row = rows[blk.name]
            lo_act, hi_act = q.model.activity_range(row.coeffs)
            hi = int(min(row.upper, hi_act))
            s = min(max(hi - row.activity(x), 0), sum(blk.weights))
            bits[blk.start:blk.stop] = encode_value(s, blk.weights)
    return bits


# ---------------------------------------------------------------- Ising form


def qubo_to_ising(Q, offset) -> tuple:
    """(h, J, const) with x_i = (1 - z_i) / 2, energy = const + h.z + sum_{i<j} J_ij z_i z_j."""
    Q = np.asarray(Q, dtype=np.float64)
    n = Q.shape[0]
    off_diag = Q - np.diag(np.diag(Q))
    J = np.triu(2 * off_diag, 1) / 4  # coefficient of x_i x_j is 2 Q_ij
    h = -np.diag(Q) / 2 - off_diag.sum(axis=1) / 2
    const = offset + np.diag(Q).sum() / 2 + off_diag.sum() / 4
    return h, J, float(const)


def ising_energy(h, J, const, z) -> float:
    z = np.asarray(z, dtype=np.float64)
    return float(const + h @ z + z @ J @ z)


# ---------------------------------------------------------------- files


def save_qubo(q: Qubo, path, decode_path=None) -> None:
    """`n offset` header, then `i j value` for i <= j, value being the energy coefficient of b_i b_j."""
    lines = [f"{q.n} {q.offset}"]
    rows, cols = np.nonzero(np.triu(q.Q))
    for i, j in zip(rows, cols):
        val = q.Q[i, j] if i == j else 2 * q.Q[i, j]
        lines.append(f"{i} {j} {val}")
    Path(path).write_text("\n".join(lines) + "\n")
    decode_path = decode_path or str(path) + ".decode.json"
    Path(decode_path).write_text(json.dumps(decode_map_to_json(q), indent=1) + "\n")


def decode_map_to_json(q: Qubo) -> dict:
    blk = lambda b: {"name": b.name, "lower": b.lower, "start": b.start, "weights": b.weights}
    return {
        "variables": [blk(b) for b in q.var_blocks],
        "slacks": [blk(b) for b in q.slack_blocks],
        "lambdas": q.lambdas,
    }


def load_qubo(path, decode_path=None, model: Optional[MilpModel] = None) -> Qubo:
    text = Path(path).read_text().split("\n")
    head = text[0].split()
    n, offset = int(head[0]), _as_number(float(head[1]))
    entries = []
    integral = isinstance(offset, int)
    for line in text[1:]:
        if not line.strip():
            continue
        i, j, v = line.split()
        v = _as_number(float(v))
        integral &= isinstance(v, int) and (i == j or v % 2 == 0)
        entries.append((int(i), int(j), v))
    Q = np.zeros((n, n), dtype=np.int64 if integral else np.float64)
    for i, j, v in entries:
        if i == j:
            Q[i, i] = v
        else:
            Q[i, j] = Q[j, i] = v // 2 if integral else v / 2
    decode_path = decode_path or str(path) + ".decode.json"
    meta = json.loads(Path(decode_path).read_text()) if Path(decode_path).exists() else {}
    mk = lambda d: BitBlock(d["name"], d["lower"], d["start"], list(d["weights"]))
    return Qubo(
        Q,
        offset,
        [mk(d) for d in meta.get("variables", [])],
        [mk(d) for d in meta.get("slacks", [])],
        meta.get("lambdas", {}),
        model,
    )
