"""Mission MILP: model container, gadgets, builder, route validation and solver adapters."""
from .build import (
    FormulationOptions,
    arc_allowed,
    build_milp,
    directed_arcs,
    fix_partial,
    infeasible_rows,
    rewrite_bases,
)
from .gadgets import (
    compute_big_m,
    gadget_conditional_equality,
    gadget_either_or,
    gadget_implication,
    gadget_min_max,
    gadget_product,
    switched_leq,
)
from .lpfile import load_lp, read_lp, save_lp, write_lp
from .model import INF, LinearConstraint, MilpModel, ModelError, VarSpec
from .routes import (
    Route,
    RouteSet,
    ValidationReport,
    assignment_from_routes,
    battery_trace,
    extract_routes,
    validate_routes,
)
