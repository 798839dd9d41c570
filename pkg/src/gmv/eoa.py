"""Embedding of Aggregation: joint learning of W, aggregates A and R.

Minimizes ``gamma * sum_g (||X_g^T a_g - 1||^2 + eta ||a_g||^2) + ||R - W^T A||_F^2``
under ``W^T W = I`` and sparse ternary columns of ``R``.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._parallel import map_ordered
from .errors import NumericalFailureError, ParameterError
from .model import GroupPartition
from .procrustes import orthogonal_procrustes
from .ternary import random_orthonormal, ternarize

log = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-9


@dataclass
class EoAState:
    W: np.ndarray
    A: np.ndarray
    R: np.ndarray
    partition: GroupPartition
    gamma: float
    eta: float
    S: int
    objective_trace: list = field(default_factory=list)
    violations: int = 0
    converged: bool = False

    @property
    def sweeps(self):
        return len(self.objective_trace) - 1


def _spd_solve(system, rhs, group):
    try:
        return cho_solve(cho_factor(system, lower=True, check_finite=True), rhs)
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailureError(f"singular aggregation system for group {group}: {exc}") from None


def ridge_aggregate(X_g, eta, group=None):
    """Minimizer of ``||X_g^T a - 1||^2 + eta ||a||^2``: ``(X_g X_g^T + eta I)^-1 X_g 1``."""
    X_g = np.asarray(X_g, dtype=float)
    system = X_g @ X_g.T + eta * np.eye(X_g.shape[0])
    return _spd_solve(system, X_g.sum(axis=1), group)


def aggregation_cost(X_g, a_g, eta):
    """``||X_g^T a_g - 1||^2 + eta ||a_g||^2`` for one group."""
    X_g = np.asarray(X_g, dtype=float)
    return float(np.sum((X_g.T @ a_g - 1.0) ** 2) + eta * np.dot(a_g, a_g))


def eoa_objective(X, state):
    X = np.asarray(X, dtype=float)
    d, N = X.shape
    W, A, R, part = state.W, state.A, state.R, state.partition
    if W.shape[0] != d or A.shape != (d, part.M) or R.shape != (W.shape[1], part.M):
        raise ParameterError(
            f"inconsistent shapes X{X.shape} W{W.shape} A{A.shape} R{R.shape} M={part.M}")
    if part.N != N:
        raise ParameterError(f"partition covers {part.N} individuals, X has {N}")
    agg = sum(aggregation_cost(X[:, members], A[:, g], state.eta)
              for g, members in enumerate(part.groups()))
    return float(state.gamma * agg + np.sum((R - W.T @ A) ** 2))


def eoa_a_step(X_g, W, r_g, gamma, eta, group=None):
    """Closed-form aggregate of one group.

    ``a_g = (W W^T + gamma (X_g X_g^T + eta I))^-1 (W r_g + gamma X_g 1)``,
    solved by Cholesky. The system is positive definite when ``gamma*eta > 0``
    or when ``W`` is square.
    """
    X_g = np.asarray(X_g, dtype=float)
    if X_g.ndim == 1:
        X_g = X_g[:, None]
    d = X_g.shape[0]
    if W.shape[0] != d or np.shape(r_g) != (W.shape[1],):
        raise ParameterError("dimension mismatch in A-step")
    if gamma < 0 or eta < 0:
        raise ParameterError(f"gamma and eta must be nonnegative, got {gamma}, {eta}")
    system = W @ W.T + gamma * (X_g @ X_g.T + eta * np.eye(d))
    rhs = W @ np.asarray(r_g, dtype=float) + gamma * X_g.sum(axis=1)
    return _spd_solve(system, rhs, group)


def eoa_r_step(A, W, S):
    """``R = T_S(W^T A)``, column by column."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[0] != W.shape[0]:
        raise ParameterError(f"A has {A.shape[0]} rows, W has {W.shape[0]}")
    return ternarize(W.T @ A, S)


def _a_sweep(X, W, R, groups, gamma, eta):
    cols = map_ordered(
        lambda g: eoa_a_step(X[:, groups[g]], W, R[:, g], gamma, eta, group=g),
        range(len(groups)))
    return np.stack(cols, axis=1)


def learn_eoa(X, partition, l, S, gamma=1e4, eta=1.0, max_iters=100, rel_tol=1e-6, seed=0):
    """Coordinate descent for the EoA construction.

    Starts from ridge aggregates ``A``, a seeded random orthonormal ``W`` and
    ``R = T_S(W^T A)``, then repeats W/A/R sweeps. The trace layout matches
    :func:`gmv.aoe.learn_aoe`.
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
    A = np.stack([ridge_aggregate(X[:, members], eta, group=g)
                  for g, members in enumerate(groups)], axis=1)
    R = eoa_r_step(A, W, S)
    state = EoAState(W=W, A=A, R=R, partition=partition, gamma=float(gamma),
                     eta=float(eta), S=int(S))
    state.objective_trace.append(eoa_objective(X, state))

    for sweep in range(1, max_iters + 1):
        state.W = orthogonal_procrustes(state.A @ state.R.T.astype(float))
        state.A = _a_sweep(X, state.W, state.R, groups, state.gamma, state.eta)
        state.R = eoa_r_step(state.A, state.W, S)
        obj = eoa_objective(X, state)
        if not np.isfinite(obj):
            raise NumericalFailureError(f"EoA objective became non-finite at sweep {sweep}")
        prev = state.objective_trace[-1]
        state.objective_trace.append(obj)
        if obj > prev * (1 + MONOTONE_SLACK):
            state.violations += 1
            log.warning("EoA objective increased at sweep %d: %.12g -> %.12g", sweep, prev, obj)
        if prev - obj <= rel_tol * prev:
            state.converged = True
            break
    return state
