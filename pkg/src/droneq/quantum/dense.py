"""Literal n^2-qubit construction of V(sigma, tau), for cross-checking the subspace simulator.

Qubit t*n + j holds x[t, j] (node j at time t); a basis state is any n x n
binary matrix, and V maps matrix X to the row/column permuted S X T.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .state import PermutationState, SwapPair


def _matrix_of(index: int, n: int) -> np.ndarray:
    bits = (index >> np.arange(n * n)) & 1
    return bits.reshape(n, n)


def _index_of(mat: np.ndarray) -> int:
    flat = mat.reshape(-1)
    return int((flat << np.arange(flat.size)).sum())


def perm_matrix(p) -> np.ndarray:
    """Row t has its 1 in column p[t]."""
    n = len(p)
    m = np.zeros((n, n), dtype=np.int64)
    m[np.arange(n), np.asarray(p)] = 1
    return m


def dense_v(n: int, pair: SwapPair) -> np.ndarray:
    """V on the full 2^(n^2) space: |X> -> |P_sigma X P_tau> with P as in perm_matrix."""
    dim = 1 << (n * n)
    S = perm_matrix(pair.sigma)
    T = perm_matrix(pair.tau).T
    V = np.zeros((dim, dim))
    for k in range(dim):
        X = _matrix_of(k, n)
        V[_index_of(S @ X @ T), k] = 1.0
    return V


def embed(state: PermutationState) -> np.ndarray:
    n = state.n
    out = np.zeros(1 << (n * n), dtype=np.complex128)
    for k, p in enumerate(state.space.perms):
        out[_index_of(perm_matrix(p))] = state.amps[k]
    return out


def dense_rotation(n: int, pair: SwapPair, theta: float) -> np.ndarray:
    """e^{i theta V} by matrix exponential (independent of the cos/sin closed form)."""
    return expm(1j * theta * dense_v(n, pair))
