"""LP-style text export and import for MilpModel.

Format (one item per line, comments start with a backslash):

    \\ droneq MILP
    minimize
     obj: 1 T + 0
    subject to
     c0: 1 e.A_start.B + 1 e.A_start.C = 1 \\ degree_out
     c1: -3 <= 1 t.B - 1 t.C <= 4 \\ time
    bounds
     0 <= t.B <= 20 \\ t_time
    end

Every variable is integer; binaries are integers with bounds [0, 1].
"""
from __future__ import annotations

import math
import re
from pathlib import Path

from .model import INF, MilpModel, ModelError


def _expr(model: MilpModel, coeffs: dict) -> str:
    if not coeffs:
        return "0"
    parts = []
    for i, c in sorted(coeffs.items()):
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {abs(c)} {model.variables[i].name}")
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else "-" + out[1:]


def write_lp(model: MilpModel) -> str:
    lines = ["\\ droneq MILP", "minimize", f" obj: {_expr(model, model.objective)} + {model.objective_offset}"]
    lines.append("subject to")
    for c in model.constraints:
        e = _expr(model, c.coeffs)
        if c.is_equality:
            body = f"{e} = {int(c.lower)}"
        elif math.isinf(c.lower):
            body = f"{e} <= {int(c.upper)}"
        elif math.isinf(c.upper):
            body = f"{e} >= {int(c.lower)}"
        else:
            body = f"{int(c.lower)} <= {e} <= {int(c.upper)}"
        lines.append(f" {c.name}: {body} \\ {c.tag}")
    lines.append("bounds")
    for v in model.variables:
        lines.append(f" {v.lower} <= {v.name} <= {v.upper} \\ {v.role}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_lp(model: MilpModel, path) -> None:
    Path(path).write_text(write_lp(model))


_TERM = re.compile(r"([+-])?\s*(\d+)\s+([^\s]+)")


def _parse_expr(text: str) -> list:
    text = text.strip()
    if text == "0":
        return []
    terms = []
    pos = 0
    for m in _TERM.finditer(text):
        if text[pos:m.start()].strip():
            raise ModelError(f"cannot parse expression near {text[pos:m.start()]!r}")
        c = int(m.group(2)) * (-1 if m.group(1) == "-" else 1)
        terms.append((m.group(3), c))
        pos = m.end()
    if text[pos:].strip():
        raise ModelError(f"cannot parse expression tail {text[pos:]!r}")
    return terms


def read_lp(text: str) -> MilpModel:
    """Parse text written by write_lp back into a model (meta is left empty)."""
    section = None
    obj_line, rows, bounds = None, [], []
    for raw in text.splitlines():
        line, _, comment = raw.partition("\\")
        line, comment = line.strip(), comment.strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "subject to", "bounds", "end"):
            section = low
            continue
        if section == "minimize":
            obj_line = line
        elif section == "subject to":
            rows.append((line, comment))
        elif section == "bounds":
            bounds.append((line, comment))
        else:
            raise ModelError(f"unexpected line outside a section: {raw!r}")
    m = MilpModel()
    for line, role in bounds:
        lo, name, hi = re.fullmatch(r"(-?\d+)\s*<=\s*(\S+)\s*<=\s*(-?\d+)", line).groups()
        m.add_var(name, int(lo), int(hi), role or "integer")

    def coeffs(expr):
        out = {}
        for name, c in _parse_expr(expr):
            out[m.index(name)] = out.get(m.index(name), 0) + c
        return out

    if obj_line is None:
        raise ModelError("LP text has no objective")
    body = obj_line.split(":", 1)[1]
    expr, _, off = body.rpartition("+")
    m.set_objective(coeffs(expr), int(off))
    for line, tag in rows:
        name, body = (s.strip() for s in line.split(":", 1))
        ranged = re.fullmatch(r"(-?\d+)\s*<=\s*(.+?)\s*<=\s*(-?\d+)", body)
        if ranged:
            m.add_constraint(coeffs(ranged.group(2)), int(ranged.group(1)), int(ranged.group(3)), tag, name)
            continue
        single = re.fullmatch(r"(.+?)\s*(<=|>=|=)\s*(-?\d+)", body)
        if not single:
            raise ModelError(f"cannot parse constraint {line!r}")
        e, op, rhs = single.group(1), single.group(2), int(single.group(3))
        lo, hi = {"=": (rhs, rhs), "<=": (-INF, rhs), ">=": (rhs, INF)}[op]
        m.add_constraint(coeffs(e), lo, hi, tag, name)
    return m


def load_lp(path) -> MilpModel:
    return read_lp(Path(path).read_text())
