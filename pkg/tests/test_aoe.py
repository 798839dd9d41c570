import logging

import numpy as np
import pytest

from gmv.aoe import AoEState, aoe_e_step, aoe_objective, aoe_r_step, learn_aoe
from gmv.data import partition_groups
from gmv.errors import ParameterError
from gmv.model import GroupPartition
from gmv.ternary import embed, is_feasible, orthonormality_error

import reference
from conftest import unit_columns

# converged objective of the d=8, N=16, M=4, m=4, l=7, S=5, xi=1, seed=0
# instance, produced by reference.aoe
GOLDEN_AOE = 59.39851926518276


def golden_instance():
    X = reference.unit_gaussian(8, 16, 0)
    groups = [list(range(4 * g, 4 * g + 4)) for g in range(4)]
    return X, groups, GroupPartition.from_groups(groups)


def test_objective_examples():
    X = np.array([[1.0], [0.0]])
    part = GroupPartition(np.array([0]))
    st = AoEState(W=np.eye(2), E=np.array([[1], [0]]), R=np.array([[0], [1]]),
                  partition=part, xi=1.0, S=1)
    assert aoe_objective(X, st) == 2.0
    st.xi = 0.0
    assert aoe_objective(X, st) == 0.0


def test_objective_zero_when_codes_match():
    X = np.eye(3)
    part = GroupPartition(np.arange(3))
    E = np.eye(3, dtype=np.int8)
    st = AoEState(W=np.eye(3), E=E, R=E.copy(), partition=part, xi=1.0, S=1)
    assert aoe_objective(X, st) == 0.0


def test_objective_dimension_mismatch():
    part = GroupPartition(np.array([0]))
    st = AoEState(W=np.eye(2), E=np.zeros((2, 1)), R=np.zeros((2, 1)), partition=part, xi=1, S=1)
    with pytest.raises(ParameterError):
        aoe_objective(np.ones((3, 1)), st)


def test_e_step_examples(rng):
    np.testing.assert_array_equal(
        aoe_e_step(np.array([[0.5], [0.3]]), np.eye(2), np.array([0, 1]), 1.0, 1), [[0], [1]])
    X = unit_columns(rng, 6, 3)
    W = np.linalg.qr(rng.standard_normal((6, 5)))[0]
    r = np.array([1, 0, -1, 0, 1])
    np.testing.assert_array_equal(aoe_e_step(X, W, r, 0.0, 3), embed(X, W, 3))
    np.testing.assert_array_equal(aoe_e_step(X, W, np.zeros(5), 7.0, 3), embed(X, W, 3))


def test_r_step_examples():
    E = np.array([[1, 1], [0, -1], [-1, 0]])
    np.testing.assert_array_equal(aoe_r_step(E, 2), [1, -1, 0])
    np.testing.assert_array_equal(aoe_r_step(E[:, :1], 2), E[:, 0])
    np.testing.assert_array_equal(aoe_r_step(np.zeros((3, 4), dtype=int), 2), [0, 0, 0])


def test_learn_invariants(rng):
    X = unit_columns(rng, 16, 40)
    part = partition_groups(40, 5, 3)
    st = learn_aoe(X, part, 14, 9, xi=1.0, seed=3)
    assert is_feasible(st.E, 9) and is_feasible(st.R, 9)
    assert orthonormality_error(st.W) <= 1e-8
    assert st.objective_trace[1] <= st.objective_trace[0]
    trace = np.array(st.objective_trace)
    assert np.all(trace[1:] <= trace[:-1] * (1 + 1e-9))
    assert aoe_objective(X, st) == st.objective_trace[-1]


def test_learn_deterministic(rng):
    X = unit_columns(rng, 12, 24)
    part = partition_groups(24, 4, 0)
    a = learn_aoe(X, part, 10, 7, seed=5)
    b = learn_aoe(X.copy(), part, 10, 7, seed=5)
    for name in ("W", "E", "R"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.objective_trace == b.objective_trace


def test_singletons_without_coupling_enroll_plain_embeddings(rng):
    X = unit_columns(rng, 10, 12)
    part = GroupPartition(np.arange(12))
    st = learn_aoe(X, part, 9, 6, xi=0.0, seed=1)
    np.testing.assert_array_equal(st.R, embed(X, st.W, 6))


def test_member_permutation(rng):
    X_g = unit_columns(rng, 8, 5)
    W = np.linalg.qr(rng.standard_normal((8, 7)))[0]
    r = np.array([1, 0, 0, -1, 1, 0, 0])
    perm = rng.permutation(5)
    E = aoe_e_step(X_g, W, r, 1.0, 4)
    np.testing.assert_array_equal(aoe_e_step(X_g[:, perm], W, r, 1.0, 4), E[:, perm])
    np.testing.assert_array_equal(aoe_r_step(E[:, perm], 4), aoe_r_step(E, 4))


def test_threaded_matches_serial(rng, monkeypatch):
    X = unit_columns(rng, 12, 36)
    part = partition_groups(36, 3, 1)
    monkeypatch.setenv("GMV_THREADS", "1")
    serial = learn_aoe(X, part, 10, 7, seed=2)
    monkeypatch.setenv("GMV_THREADS", "4")
    threaded = learn_aoe(X, part, 10, 7, seed=2)
    assert np.array_equal(serial.W, threaded.W) and np.array_equal(serial.E, threaded.E)


def test_violation_is_logged_not_raised(rng, monkeypatch, caplog):
    import gmv.aoe as aoe_mod

    real = aoe_mod.aoe_objective
    calls = {"n": 0}

    def bumpy(X, state):
        calls["n"] += 1
        return real(X, state) + (10.0 if calls["n"] == 2 else 0.0)

    monkeypatch.setattr(aoe_mod, "aoe_objective", bumpy)
    X = unit_columns(rng, 8, 8)
    with caplog.at_level(logging.WARNING, logger="gmv.aoe"):
        st = learn_aoe(X, partition_groups(8, 2, 0), 6, 4, seed=0, max_iters=3)
    assert st.violations == 1
    assert "increased" in caplog.text


def test_golden_reference():
    X, groups, part = golden_instance()
    _, _, R_ref, trace_ref = reference.aoe(X, groups, 7, 5, 1.0, seed=0)
    st = learn_aoe(X, part, 7, 5, xi=1.0, seed=0)
    assert np.isclose(trace_ref[-1], GOLDEN_AOE, rtol=1e-9, atol=0)
    assert np.isclose(st.objective_trace[-1], GOLDEN_AOE, rtol=1e-9, atol=0)
    np.testing.assert_array_equal(st.R, R_ref)


def test_rejects_long_codes(rng):
    with pytest.raises(ParameterError):
        learn_aoe(unit_columns(rng, 4, 4), GroupPartition(np.arange(4)), 5, 2)
