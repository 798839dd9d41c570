"""Orthogonality-constrained least squares shared by both W-steps."""
import numpy as np

from .errors import NumericalFailureError, ParameterError

RANK_TOL = 1e-9


def canonical_complement(B, k):
    """``k`` orthonormal vectors orthogonal to the columns of ``B``.

    Standard basis vectors are projected off the current span in index order
    and kept when the remainder is not negligible (classical Gram-Schmidt,
    applied twice). The result depends only on ``span(B)``, not on the basis
    used to describe it.
    """
    n = B.shape[0]
    Q = np.zeros((n, B.shape[1] + k))
    Q[:, :B.shape[1]] = B
    filled = B.shape[1]
    for j in range(n):
        if filled == B.shape[1] + k:
            break
        v = np.zeros(n)
        v[j] = 1.0
        for _ in range(2):
            v -= Q[:, :filled] @ (Q[:, :filled].T @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            Q[:, filled] = v / norm
            filled += 1
    if filled != B.shape[1] + k:
        raise NumericalFailureError("could not complete an orthonormal basis")
    return Q[:, B.shape[1]:]


def orthogonal_procrustes(cross):
    """Column-orthonormal ``W`` maximizing ``trace(W^T cross)``.

    For the W-steps ``min ||E - W^T X||_F`` s.t. ``W^T W = I`` the cross
    matrix is ``X E^T`` (or ``A R^T``); the maximizer is the polar factor
    ``U V^T`` of its thin singular value decomposition.

    Parameters
    ----------
    cross : array_like, shape (d, l)
        With ``l <= d``.

    Returns
    -------
    W : ndarray, shape (d, l)

    Notes
    -----
    When ``cross`` has rank ``r < l`` the maximizer is not unique: only the
    part ``U_r V_r^T`` on the nonzero singular values is determined. The
    remaining ``l - r`` columns pair :func:`canonical_complement` of ``U_r``
    with that of ``V_r``, so ``W`` does not depend on how the factorization
    routine picks singular vectors for zero singular values.
    """
    cross = np.asarray(cross, dtype=float)
    if cross.ndim != 2:
        raise ParameterError(f"cross matrix must be 2-D, got ndim={cross.ndim}")
    d, l = cross.shape
    if l > d:
        raise ParameterError(f"l={l} exceeds d={d}")
    if not np.all(np.isfinite(cross)):
        raise NumericalFailureError("cross matrix has non-finite entries")
    U, s, Vt = np.linalg.svd(cross, full_matrices=False)
    r = int(np.count_nonzero(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    W = U[:, :r] @ Vt[:r]
    if r < l:
        W = W + canonical_complement(U[:, :r], l - r) @ canonical_complement(Vt[:r].T, l - r).T
    return W
