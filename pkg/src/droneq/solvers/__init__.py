"""Classical QUBO solvers, route decoding and the decomposition pipeline."""
from .anneal import AnnealSchedule, SolveResult, simulated_anneal
from .decode import DecodedRoutes, decode_routes
from .exact import brute_force
from .pipeline import PipelineConfig, PipelineError, PipelineResult, solve_pipeline, stage_budgets
