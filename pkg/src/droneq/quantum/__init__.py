"""Permutation-subspace simulation of Q-SWAP and the sorting-network VQE for the TSP core."""
from .qswap import (
    STRATEGIES,
    QswapRun,
    f_theta,
    fit_pair,
    fit_sinusoid,
    make_strategy,
    qswap_step,
    run_qswap,
    strategy_mutations,
    strategy_random_1swap,
    strategy_random_both,
)
from .space import PermutationSpace, cayley_distance, involutions, is_involution, random_involution, transposition
from .state import (
    PermutationState,
    SwapPair,
    TspHamiltonian,
    apply_phase,
    apply_vswap,
    average_ratio,
    basis_state,
    canonical_tour,
    default_delta,
    expectation,
    sample_routes,
    uniform_superposition,
)
from .vqe import SortingNetwork, VqeConfig, VqeResult, minimal_sorting_network, vqe_apply, vqe_optimize
