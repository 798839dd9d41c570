import numpy as np
import pytest

from gmv.errors import NumericalFailureError, ParameterError
from gmv.procrustes import canonical_complement, orthogonal_procrustes
from gmv.ternary import orthonormality_error

import reference


def random_orthonormal_candidates(rng, d, l, n):
    for _ in range(n):
        Q, _ = np.linalg.qr(rng.standard_normal((d, l)))
        yield Q


def grid_optimum_o2(C, steps=200001):
    # O(2) = rotations [[c,-s],[s,c]] and reflections [[c,s],[s,-c]]
    theta = np.linspace(-np.pi, np.pi, steps)
    c, s = np.cos(theta), np.sin(theta)
    rot = c * (C[0, 0] + C[1, 1]) + s * (C[1, 0] - C[0, 1])
    ref = c * (C[0, 0] - C[1, 1]) + s * (C[0, 1] + C[1, 0])
    if rot.max() >= ref.max():
        k = rot.argmax()
        return np.array([[c[k], -s[k]], [s[k], c[k]]]), rot.max()
    k = ref.argmax()
    return np.array([[c[k], s[k]], [s[k], -c[k]]]), ref.max()


def test_identity_and_positive_diagonal():
    np.testing.assert_allclose(orthogonal_procrustes(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(orthogonal_procrustes(np.diag([2.0, 3.0])), np.eye(2), atol=1e-15)


def test_two_by_two_against_grid_search():
    C = np.array([[1.0, 2.0], [3.0, 4.0]])
    W_grid, best = grid_optimum_o2(C)
    W = orthogonal_procrustes(C)
    assert np.isclose(best, np.sqrt(34), atol=1e-8)
    assert np.isclose(np.trace(W.T @ C), np.sqrt(34), rtol=1e-12)
    np.testing.assert_allclose(W, W_grid, atol=1e-4)
    np.testing.assert_allclose(W, [[-0.5145, 0.8575], [0.8575, 0.5145]], atol=1e-4)
    assert np.linalg.det(W) < 0


def test_optimality_against_random_candidates(rng):
    C = rng.standard_normal((9, 5))
    W = orthogonal_procrustes(C)
    assert orthonormality_error(W) <= 1e-8
    best = np.trace(W.T @ C)
    for Q in random_orthonormal_candidates(rng, 9, 5, 1000):
        assert best >= np.trace(Q.T @ C) - 1e-9


@pytest.mark.parametrize("rank", [0, 1, 3])
def test_rank_deficient_still_orthonormal_and_optimal(rng, rank):
    d, l = 8, 6
    C = rng.standard_normal((d, rank)) @ rng.standard_normal((rank, l)) if rank else np.zeros((d, l))
    W = orthogonal_procrustes(C)
    assert orthonormality_error(W) <= 1e-8
    best = np.trace(W.T @ C)
    for Q in random_orthonormal_candidates(rng, d, l, 200):
        assert best >= np.trace(Q.T @ C) - 1e-9


def test_rank_deficient_matches_eigenvector_route(rng):
    C = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 6))
    np.testing.assert_allclose(orthogonal_procrustes(C), reference.procrustes(C), atol=1e-9)


def test_full_rank_matches_eigenvector_route(rng):
    C = rng.standard_normal((10, 7))
    np.testing.assert_allclose(orthogonal_procrustes(C), reference.procrustes(C), atol=1e-9)


def test_deterministic(rng):
    C = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 4))
    assert np.array_equal(orthogonal_procrustes(C), orthogonal_procrustes(C.copy()))


def test_canonical_complement_is_basis_independent(rng):
    B, _ = np.linalg.qr(rng.standard_normal((7, 3)))
    rot, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    K1 = canonical_complement(B, 4)
    K2 = canonical_complement(B @ rot, 4)
    np.testing.assert_allclose(K1, K2, atol=1e-12)
    np.testing.assert_allclose(B.T @ K1, 0, atol=1e-12)


def test_errors():
    with pytest.raises(ParameterError):
        orthogonal_procrustes(np.ones((2, 3)))
    with pytest.raises(NumericalFailureError):
        orthogonal_procrustes(np.array([[np.nan, 0.0], [0.0, 1.0]]))
