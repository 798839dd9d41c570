"""Sparse ternary quantization and the sparsifying-transform embedding.

A code is an integer vector over {-1, 0, +1} with at most ``S`` nonzeros.
All functions accept a single vector or a matrix whose *columns* are
vectors, mirroring the column-wise storage of templates.
"""
import numpy as np

from .errors import DegenerateCodeError, ParameterError

ORTHONORMAL_TOL = 1e-8


def ternarize(v, S):
    """Keep the ``S`` largest-magnitude entries as their signs, zero the rest.

    Parameters
    ----------
    v : array_like, shape (l,) or (l, n)
        Real vector, or matrix processed column by column.
    S : int
        Sparsity budget, ``1 <= S <= l``.

    Returns
    -------
    ndarray of int8, same shape as ``v``

    Notes
    -----
    Ties in magnitude keep the lowest index. Exact zeros are never promoted
    to +-1, so the output may hold fewer than ``S`` nonzeros.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim not in (1, 2):
        raise ParameterError(f"expected a vector or matrix, got ndim={v.ndim}")
    l = v.shape[0]
    S = int(S)
    if S < 1 or S > l:
        raise ParameterError(f"sparsity S={S} outside [1, {l}]")
    # stable sort on -|v| keeps the lowest index first among equal magnitudes
    order = np.argsort(-np.abs(v), axis=0, kind="stable")
    keep = np.zeros(v.shape, dtype=bool)
    np.put_along_axis(keep, order[:S], True, axis=0)
    return np.where(keep, np.sign(v), 0.0).astype(np.int8)


def embed(x, W, S):
    """Embedding ``T_S(W^T x)`` of a template (or of every column of ``x``)."""
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float)
    if W.ndim != 2 or x.shape[0] != W.shape[0]:
        raise ParameterError(
            f"template dimension {x.shape[0]} does not match W with shape {W.shape}")
    return ternarize(W.T @ x, S)


def reconstruct_unit(c, W):
    """Unit-norm estimate ``W c / ||W c||`` of the template behind code ``c``."""
    c = np.asarray(c, dtype=float)
    W = np.asarray(W, dtype=float)
    if c.ndim != 1 or c.shape[0] != W.shape[1]:
        raise ParameterError(f"code length {c.shape} does not match W with shape {W.shape}")
    if not np.any(c):
        raise DegenerateCodeError("all-zero code has no direction information")
    y = W @ c
    return y / np.linalg.norm(y)


def is_feasible(codes, S):
    """True when every column is ternary with at most ``S`` nonzeros."""
    codes = np.asarray(codes)
    if not np.all(np.isin(codes, (-1, 0, 1))):
        return False
    nnz = np.count_nonzero(codes, axis=0)
    return bool(np.all(nnz <= S))


def orthonormality_error(W):
    """Frobenius norm of ``W^T W - I``."""
    W = np.asarray(W, dtype=float)
    return float(np.linalg.norm(W.T @ W - np.eye(W.shape[1])))


def random_orthonormal(d, l, rng):
    """Column-orthonormal ``d x l`` matrix from the QR of a Gaussian draw.

    Column signs are fixed so that the triangular factor has a positive
    diagonal, which makes the result a function of the generator state only.
    """
    if l > d:
        raise ParameterError(f"l={l} exceeds d={d}")
    G = rng.standard_normal((d, l))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs
