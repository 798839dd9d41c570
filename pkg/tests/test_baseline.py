import numpy as np

from gmv.baseline import baseline_aoe_enroll, baseline_eoa_enroll
from gmv.data import partition_groups
from gmv.eoa import aggregation_cost, ridge_aggregate
from gmv.model import GroupPartition
from gmv.ternary import embed

from conftest import unit_columns
from test_eoa import fd_gradient


def test_aoe_singletons_enroll_embeddings(rng):
    X = unit_columns(rng, 12, 6)
    model = baseline_aoe_enroll(X, GroupPartition(np.arange(6)), 10, 6, seed=3)
    np.testing.assert_array_equal(model.R, embed(X, model.W, 6))
    model.check()


def test_aoe_duplicate_members(rng):
    x = unit_columns(rng, 12, 1)
    model = baseline_aoe_enroll(np.hstack([x, x]), GroupPartition(np.array([0, 0])), 10, 6, seed=0)
    np.testing.assert_array_equal(model.R[:, 0], embed(x[:, 0], model.W, 6))


def test_reproducible(rng):
    X = unit_columns(rng, 16, 20)
    part = partition_groups(20, 4, 1)
    for enroll in (baseline_aoe_enroll, baseline_eoa_enroll):
        a, b = enroll(X, part, 14, 9, seed=11), enroll(X, part, 14, 9, seed=11)
        assert np.array_equal(a.W, b.W) and np.array_equal(a.R, b.R)
        a.check()


def test_eoa_aggregate_is_exact_minimizer(rng):
    for _ in range(10):
        X_g = unit_columns(rng, 6, int(rng.integers(1, 6)))
        a = ridge_aggregate(X_g, 1.0)
        f = lambda v: aggregation_cost(X_g, v, 1.0)
        scale = 1 + np.linalg.norm(fd_gradient(f, np.zeros(6)))
        assert np.linalg.norm(fd_gradient(f, a)) <= 1e-5 * scale


def test_eoa_representation_is_projected_aggregate(rng):
    X = unit_columns(rng, 8, 8)
    part = partition_groups(8, 4, 0)
    model = baseline_eoa_enroll(X, part, 7, 5, eta=1.0, seed=2)
    for g, members in enumerate(part.groups()):
        np.testing.assert_array_equal(model.R[:, g],
                                      embed(ridge_aggregate(X[:, members], 1.0), model.W, 5))
