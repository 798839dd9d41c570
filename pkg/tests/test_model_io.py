import struct

import numpy as np
import pytest

from gmv.data import gen_synthetic, partition_groups
from gmv.errors import FormatError, ParameterError
from gmv.experiment import enroll
from gmv.model import GroupModel, GroupPartition, load_model, save_model
from gmv.ternary import orthonormality_error


@pytest.fixture
def model():
    T, _ = gen_synthetic(16, 20, 0.3, 0, seed=2)
    return enroll("eoa", T.X, partition_groups(20, 3, 2), 14, 9, seed=2)


def test_round_trip(tmp_path, model):
    path = tmp_path / "m.gmvm"
    save_model(model, path)
    back = load_model(path)
    assert back.method == "eoa" and back.S == 9 and back.seed == 2
    assert back.gamma == model.gamma and back.eta == model.eta
    np.testing.assert_array_equal(back.R, model.R)
    np.testing.assert_array_equal(back.partition.assignments, model.partition.assignments)
    np.testing.assert_allclose(back.W, model.W, atol=1e-6)
    assert orthonormality_error(back.W) <= 1e-8
    back.check()


def test_layout(tmp_path):
    W = np.eye(3)[:, :2]
    R = np.array([[1, 0], [0, -1]], dtype=np.int8)
    m = GroupModel(W=W, R=R, partition=GroupPartition(np.array([1, 0, 1])),
                   method="baseline-eoa", S=1, eta=0.5, seed=7)
    path = tmp_path / "m.gmvm"
    save_model(m, path)
    raw = path.read_bytes()
    assert raw[:4] == b"GMVM"
    assert struct.unpack_from("<IIIIIB", raw, 4) == (1, 3, 2, 1, 2, 3)
    assert struct.unpack_from("<dddQ", raw, 25) == (0.0, 0.0, 0.5, 7)
    off = 57
    assert struct.unpack_from("<6f", raw, off) == (1, 0, 0, 0, 1, 0)
    off += 24
    assert struct.unpack_from("<4b", raw, off) == (1, 0, 0, -1)
    off += 4
    assert struct.unpack_from("<2I3I", raw, off) == (1, 2, 1, 0, 2)
    assert len(raw) == off + 20


@pytest.mark.parametrize("cut", [3, 40, 70, -2])
def test_truncated(tmp_path, model, cut):
    path = tmp_path / "m.gmvm"
    save_model(model, path)
    path.write_bytes(path.read_bytes()[:cut])
    with pytest.raises(FormatError):
        load_model(path)


def test_bad_magic(tmp_path, model):
    path = tmp_path / "m.gmvm"
    save_model(model, path)
    path.write_bytes(b"GMVD" + path.read_bytes()[4:])
    with pytest.raises(FormatError) as err:
        load_model(path)
    assert err.value.offset == 0


def test_check_rejects_bad_models():
    part = GroupPartition(np.array([0]))
    with pytest.raises(ParameterError):
        GroupModel(W=np.ones((2, 1)), R=np.array([[1]]), partition=part, method="aoe", S=1).check()
    with pytest.raises(ParameterError):
        GroupModel(W=np.eye(2), R=np.array([[1], [1]]), partition=part, method="aoe", S=1).check()


def test_partition_validation():
    with pytest.raises(ParameterError):
        GroupPartition(np.array([0, 2]))
    with pytest.raises(ParameterError):
        GroupPartition.from_groups([[0, 1], [1]])
    part = GroupPartition.from_groups([[2, 0], [1]])
    assert part.sizes.tolist() == [2, 1] and part.N == 3
