"""Fixed-rule enrollment used as the comparison point for the learned schemes.

Both variants draw a random orthonormal ``W`` from ``seed`` and never update
it. ``baseline-aoe`` embeds each member and ternarizes the sum of the codes;
``baseline-eoa`` ternarizes the projection of the ridge aggregate.
"""
import numpy as np

from .eoa import ridge_aggregate
from .errors import ParameterError
from .model import GroupModel
from .ternary import embed, random_orthonormal, ternarize


def _fixed_projection(d, l, S, seed):
    if l > d:
        raise ParameterError(f"l={l} exceeds d={d}")
    if not 1 <= S <= l:
        raise ParameterError(f"S={S} outside [1, {l}]")
    return random_orthonormal(d, l, np.random.default_rng(seed))


def baseline_aoe_enroll(X, partition, l, S, seed=0):
    X = np.asarray(X, dtype=float)
    W = _fixed_projection(X.shape[0], l, S, seed)
    E = embed(X, W, S)
    R = np.stack([ternarize(E[:, members].sum(axis=1, dtype=np.int64), S)
                  for members in partition.groups()], axis=1)
    return GroupModel(W=W, R=R, partition=partition, method="baseline-aoe", S=S, seed=seed)


def baseline_eoa_enroll(X, partition, l, S, eta=1.0, seed=0):
    X = np.asarray(X, dtype=float)
    W = _fixed_projection(X.shape[0], l, S, seed)
    A = np.stack([ridge_aggregate(X[:, members], eta, group=g)
                  for g, members in enumerate(partition.groups())], axis=1)
    return GroupModel(W=W, R=ternarize(W.T @ A, S), partition=partition,
                      method="baseline-eoa", S=S, eta=eta, seed=seed)
