"""Group partition, enrolled group model and the GMVM model file."""
from dataclasses import dataclass, field
import struct

import numpy as np

from .errors import FormatError, ParameterError
from .procrustes import orthogonal_procrustes
from .ternary import ORTHONORMAL_TOL, is_feasible, orthonormality_error

METHODS = ("aoe", "eoa", "baseline-aoe", "baseline-eoa")
MODEL_MAGIC = b"GMVM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIBdddQ")


@dataclass(frozen=True)
class GroupPartition:
    """Assignment of ``N`` individuals (template columns) to ``M`` groups."""

    assignments: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignments)
        if a.ndim != 1 or a.size == 0:
            raise ParameterError("assignments must be a nonempty 1-D vector")
        if not np.issubdtype(a.dtype, np.integer):
            raise ParameterError("assignments must be integers")
        a = a.astype(np.int64)
        if a.min() < 0:
            raise ParameterError("negative group index")
        counts = np.bincount(a)
        if np.any(counts == 0):
            raise ParameterError(f"empty group(s): {np.flatnonzero(counts == 0).tolist()}")
        object.__setattr__(self, "assignments", a)

    @classmethod
    def from_groups(cls, groups, N=None):
        N = sum(len(g) for g in groups) if N is None else N
        assignments = np.full(N, -1, dtype=np.int64)
        for g, members in enumerate(groups):
            if np.any(assignments[list(members)] >= 0):
                raise ParameterError("an individual belongs to more than one group")
            assignments[list(members)] = g
        if np.any(assignments < 0):
            raise ParameterError("some individuals are not assigned to a group")
        return cls(assignments)

    @property
    def N(self):
        return self.assignments.size

    @property
    def M(self):
        return int(self.assignments.max()) + 1

    @property
    def sizes(self):
        return np.bincount(self.assignments, minlength=self.M)

    def members(self, g):
        return np.flatnonzero(self.assignments == g)

    def groups(self):
        return [self.members(g) for g in range(self.M)]


@dataclass
class GroupModel:
    """What the server stores after enrollment: ``W``, ``R`` and metadata."""

    W: np.ndarray
    R: np.ndarray
    partition: GroupPartition
    method: str
    S: int
    xi: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    seed: int = 0
    objective_trace: list = field(default_factory=list)

    @property
    def d(self):
        return self.W.shape[0]

    @property
    def l(self):
        return self.W.shape[1]

    @property
    def M(self):
        return self.R.shape[1]

    def check(self):
        """Raise ``ParameterError`` if any model invariant is violated."""
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}")
        if self.R.shape[0] != self.l:
            raise ParameterError(f"R has {self.R.shape[0]} rows, W has {self.l} columns")
        if self.M != self.partition.M:
            raise ParameterError(f"R has {self.M} columns but partition has {self.partition.M} groups")
        if not is_feasible(self.R, self.S):
            raise ParameterError("R is not ternary with at most S nonzeros per column")
        err = orthonormality_error(self.W)
        if err > ORTHONORMAL_TOL:
            raise ParameterError(f"W is not column-orthonormal (error {err:.3g})")
        return self


def save_model(model, path):
    """Write ``model`` as a GMVM file.

    ``W`` is stored as float32; ``load_model`` restores orthonormality.
    """
    groups = model.partition.groups()
    header = _HEADER.pack(
        MODEL_MAGIC, MODEL_VERSION, model.d, model.l, int(model.S), model.M,
        METHODS.index(model.method), float(model.xi), float(model.gamma),
        float(model.eta), int(model.seed))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(model.W, dtype="<f4").tobytes(order="F"))
        fh.write(np.asarray(model.R, dtype=np.int8).tobytes(order="F"))
        fh.write(np.array([len(g) for g in groups], dtype="<u4").tobytes())
        fh.write(np.concatenate(groups).astype("<u4").tobytes())


def _take(buf, offset, nbytes, what):
    if offset + nbytes > len(buf):
        raise FormatError(f"truncated {what}: need {nbytes} bytes, "
                          f"{len(buf) - offset} left", offset)
    return buf[offset:offset + nbytes], offset + nbytes


def load_model(path):
    """Read a GMVM file written by :func:`save_model`.

    The float32 projection is snapped back onto the set of column-orthonormal
    matrices (polar factor), which moves it by at most float32 rounding.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    raw, off = _take(buf, 0, _HEADER.size, "header")
    magic, version, d, l, S, M, tag, xi, gamma, eta, seed = _HEADER.unpack(raw)
    if magic != MODEL_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MODEL_MAGIC!r}", 0)
    if version != MODEL_VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if tag >= len(METHODS):
        raise FormatError(f"unknown method tag {tag}", 24)
    if l > d or M == 0:
        raise FormatError(f"inconsistent dimensions d={d} l={l} M={M}", 8)
    raw, off2 = _take(buf, off, 4 * d * l, "projection matrix")
    W = np.frombuffer(raw, dtype="<f4").reshape((d, l), order="F").astype(float)
    if not np.all(np.isfinite(W)):
        raise FormatError("non-finite entry in projection matrix", off)
    off = off2
    raw, off2 = _take(buf, off, l * M, "representations")
    R = np.frombuffer(raw, dtype=np.int8).reshape((l, M), order="F").copy()
    if not np.all(np.isin(R, (-1, 0, 1))):
        raise FormatError("representation entry outside {-1, 0, 1}", off)
    off = off2
    raw, off = _take(buf, off, 4 * M, "group sizes")
    sizes = np.frombuffer(raw, dtype="<u4").astype(np.int64)
    raw, off2 = _take(buf, off, 4 * int(sizes.sum()), "member indices")
    members = np.frombuffer(raw, dtype="<u4").astype(np.int64)
    if off2 != len(buf):
        raise FormatError(f"{len(buf) - off2} trailing bytes", off2)
    try:
        partition = GroupPartition.from_groups(np.split(members, np.cumsum(sizes)[:-1]))
    except (ParameterError, IndexError) as exc:
        raise FormatError(f"invalid group membership: {exc}", off) from None
    W = orthogonal_procrustes(W)
    return GroupModel(W=W, R=R, partition=partition, method=METHODS[tag], S=S,
                      xi=xi, gamma=gamma, eta=eta, seed=seed)
