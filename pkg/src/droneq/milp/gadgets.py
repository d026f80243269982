"""Linearization gadgets: switched inequalities, disjunctions, products and min-max.

Each gadget appends variables and rows to a MilpModel. Big-M constants are
derived from variable bounds by interval arithmetic, never hard-coded.
"""
from __future__ import annotations

from .model import MilpModel, ModelError


def compute_big_m(model: MilpModel, coeffs: dict, rhs: int) -> int:
    """Smallest M with c^T x - M <= rhs for every x in the variable box."""
    _, hi = model.activity_range(coeffs)
    return max(0, int(hi - rhs))


def _as_expr(term) -> dict:
    return dict(term) if isinstance(term, dict) else {int(term): 1}


def switched_leq(model, coeffs, rhs, conditions, M=None, tag="", name=""):
    """Add c^T x <= rhs, enforced only when every (binary, value) condition holds.

    The row is relaxed by M for each unmet condition, so M only needs to cover
    the worst case of a single relaxation.
    """
    need = compute_big_m(model, coeffs, rhs)
    if M is None:
        M = need
    elif M < need:
        raise ModelError(f"big-M {M} too small for {name or tag}; need at least {need}")
    row = dict(coeffs)
    upper = rhs
    for var, active in conditions:
        if active:  # off-indicator is (1 - b)
            row[var] = row.get(var, 0) + M
            upper += M
        else:  # off-indicator is b
            row[var] = row.get(var, 0) - M
    return model.add_constraint(row, upper=upper, tag=tag, name=name)


def gadget_implication(model, condition, coeffs, rhs, M=None, tag="implication", name=""):
    """c^T x - (1 - b) M <= rhs: enforced when `condition` is 1, inactive when 0."""
    return switched_leq(model, coeffs, rhs, [(condition, 1)], M=M, tag=tag, name=name)


def gadget_either_or(model, first, second, selector=None, tag="either_or", name=""):
    """At least one of two inequalities holds; returns the selector binary.

    `first` and `second` are (coeffs, rhs). The first is enforced when the
    selector is 1 and the second when it is 0.
    """
    if selector is None:
        selector = model.add_var(name or f"b.{len(model.variables)}", 0, 1, "b_disjunct")
    switched_leq(model, first[0], first[1], [(selector, 1)], tag=tag)
    switched_leq(model, second[0], second[1], [(selector, 0)], tag=tag)
    return selector


def gadget_conditional_equality(model, condition, coeffs, rhs, tag="conditional_equality"):
    """c^T x = rhs whenever `condition` is 1, as a pair of switched inequalities."""
    neg = {k: -v for k, v in coeffs.items()}
    upper = switched_leq(model, coeffs, rhs, [(condition, 1)], tag=tag)
    lower = switched_leq(model, neg, -rhs, [(condition, 1)], tag=tag)
    return upper, lower


def gadget_product(model, x, y, name=None, tag="product"):
    """z = x * y for binary x, y (variables or 0/1-valued linear expressions)."""
    ex, ey = _as_expr(x), _as_expr(y)
    z = model.add_var(name or f"y.{len(model.variables)}", 0, 1, "y_product")
    # 1 + z >= x + y
    row = {k: v for k, v in ex.items()}
    for k, v in ey.items():
        row[k] = row.get(k, 0) + v
    row[z] = row.get(z, 0) - 1
    model.add_constraint(row, upper=1, tag=tag)
    # z <= x, z <= y
    for e in (ex, ey):
        r = {k: -v for k, v in e.items()}
        r[z] = r.get(z, 0) + 1
        model.add_constraint(r, upper=0, tag=tag)
    return z


def gadget_min_max(model, values, name="T", role="T_makespan", tag="makespan"):
    """X with X_i <= X for all i; minimizing X minimizes max_i X_i."""
    if not values:
        raise ModelError("min-max gadget needs at least one variable")
    lo = max(model.variables[i].lower for i in values)
    hi = max(model.variables[i].upper for i in values)
    X = model.add_var(name, lo, hi, role)
    for i in values:
        model.add_constraint({i: 1, X: -1}, upper=0, tag=tag)
    return X
