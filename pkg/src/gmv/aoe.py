"""Aggregation of Embeddings: joint learning of W, member codes E and R.

Minimizes ``||E - W^T X||_F^2 + xi * sum_g ||E_g - r_g 1^T||_F^2`` under
``W^T W = I`` and sparse ternary columns of ``E`` and ``R``, by sweeping
W-step (Procrustes), E-step and R-step until the objective settles.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from ._parallel import map_ordered
from .errors import NumericalFailureError, ParameterError
from .model import GroupPartition
from .procrustes import orthogonal_procrustes
from .ternary import random_orthonormal, ternarize

log = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-9


@dataclass
class AoEState:
    W: np.ndarray
    E: np.ndarray
    R: np.ndarray
    partition: GroupPartition
    xi: float
    S: int
    objective_trace: list = field(default_factory=list)
    violations: int = 0
    converged: bool = False

    @property
    def sweeps(self):
        return len(self.objective_trace) - 1


def _check_shapes(X, W, E, R, partition):
    d, N = X.shape
    if W.shape[0] != d:
        raise ParameterError(f"W has {W.shape[0]} rows, templates have dimension {d}")
    l = W.shape[1]
    if E.shape != (l, N):
        raise ParameterError(f"E has shape {E.shape}, expected {(l, N)}")
    if R.shape != (l, partition.M):
        raise ParameterError(f"R has shape {R.shape}, expected {(l, partition.M)}")
    if partition.N != N:
        raise ParameterError(f"partition covers {partition.N} individuals, X has {N}")


def aoe_objective(X, state):
    """Embedding fidelity plus ``xi`` times the aggregation cost."""
    X = np.asarray(X, dtype=float)
    _check_shapes(X, state.W, state.E, state.R, state.partition)
    fidelity = np.sum((state.E - state.W.T @ X) ** 2)
    spread = state.E - state.R[:, state.partition.assignments]
    return float(fidelity + state.xi * np.sum(spread.astype(float) ** 2))


def aoe_e_step(X_g, W, r_g, xi, S):
    """Member codes of one group: ``T_S(W^T X_g + xi r_g 1^T)``."""
    X_g = np.asarray(X_g, dtype=float)
    if X_g.ndim == 1:
        X_g = X_g[:, None]
    if X_g.shape[0] != W.shape[0] or np.shape(r_g) != (W.shape[1],):
        raise ParameterError("dimension mismatch in E-step")
    if xi < 0:
        raise ParameterError(f"xi must be nonnegative, got {xi}")
    return ternarize(W.T @ X_g + xi * np.asarray(r_g, dtype=float)[:, None], S)


def aoe_r_step(E_g, S):
    """Group representation ``T_S(E_g 1)``."""
    E_g = np.asarray(E_g)
    if E_g.ndim == 1:
        E_g = E_g[:, None]
    return ternarize(E_g.sum(axis=1, dtype=np.int64), S)


def _e_sweep(X, W, R, groups, xi, S):
    E = np.empty((W.shape[1], X.shape[1]), dtype=np.int8)
    blocks = map_ordered(lambda g: aoe_e_step(X[:, groups[g]], W, R[:, g], xi, S),
                         range(len(groups)))
    for members, block in zip(groups, blocks):
        E[:, members] = block
    return E


def _r_sweep(E, groups, S):
    return np.stack([aoe_r_step(E[:, members], S) for members in groups], axis=1)


def learn_aoe(X, partition, l, S, xi=1.0, max_iters=100, rel_tol=1e-6, seed=0):
    """Coordinate descent for the AoE construction.

    Starts from a seeded random orthonormal ``W``, ``E = T_S(W^T X)`` and
    per-group ``R`` from the R-step, then repeats W/E/R sweeps.
    ``objective_trace[0]`` is the initial objective and entry ``t`` the value
    after sweep ``t``. Sweeps that raise the objective are logged and counted
    in ``violations`` rather than aborting.
    """
    X = np.asarray(X, dtype=float)
    d, N = X.shape
    if l > d:
        raise ParameterError(f"l={l} exceeds d={d}")
    if partition.N != N:
        raise ParameterError(f"partition covers {partition.N} individuals, X has {N}")
    groups = partition.groups()

    rng = np.random.default_rng(seed)
    W = random_orthonormal(d, l, rng)
    E = ternarize(W.T @ X, S)
    R = _r_sweep(E, groups, S)
    state = AoEState(W=W, E=E, R=R, partition=partition, xi=float(xi), S=int(S))
    state.objective_trace.append(aoe_objective(X, state))

    for sweep in range(1, max_iters + 1):
        state.W = orthogonal_procrustes(X @ state.E.T.astype(float))
        state.E = _e_sweep(X, state.W, state.R, groups, state.xi, S)
        state.R = _r_sweep(state.E, groups, S)
        obj = aoe_objective(X, state)
        if not np.isfinite(obj):
            raise NumericalFailureError(f"AoE objective became non-finite at sweep {sweep}")
        prev = state.objective_trace[-1]
        state.objective_trace.append(obj)
        if obj > prev * (1 + MONOTONE_SLACK):
            state.violations += 1
            log.warning("AoE objective increased at sweep %d: %.12g -> %.12g", sweep, prev, obj)
        if prev - obj <= rel_tol * prev:
            state.converged = True
            break
    return state
