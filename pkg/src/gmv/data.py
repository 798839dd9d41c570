"""Templates, queries, group partitioning and the GMVD descriptor file."""
from dataclasses import dataclass, field
import struct

import numpy as np

from .errors import FormatError, ParameterError
from .model import GroupPartition

UNIT_TOL = 1e-6
IMPOSTOR = -1
DESCRIPTOR_MAGIC = b"GMVD"
DESCRIPTOR_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def _check_unit(X):
    norms = np.linalg.norm(X, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
    if bad.size:
        raise ParameterError(f"column {bad[0]} has norm {norms[bad[0]]:.9g}, expected 1")


@dataclass
class TemplateMatrix:
    """``d x N`` matrix of unit-norm templates and their identity labels."""

    X: np.ndarray
    ids: np.ndarray = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[1] < 1:
            raise ParameterError(f"template matrix must be d x N with N >= 1, got {self.X.shape}")
        _check_unit(self.X)
        if self.ids is None:
            self.ids = np.arange(self.X.shape[1], dtype=np.int64)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.ids.shape != (self.X.shape[1],):
            raise ParameterError("one identity label per template is required")

    @property
    def d(self):
        return self.X.shape[0]

    @property
    def N(self):
        return self.X.shape[1]


@dataclass
class QuerySet:
    """Unit-norm queries with ground truth.

    ``labels[k]`` is the enrolled identity a genuine query belongs to, or
    ``IMPOSTOR``. ``difficulty`` holds ``"easy"``, ``"hard"`` or ``"unsplit"``.
    """

    Y: np.ndarray
    labels: np.ndarray
    difficulty: np.ndarray = None
    dropped: int = 0
    cosines: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        if self.Y.ndim != 2:
            raise ParameterError(f"queries must be a d x Q matrix, got {self.Y.shape}")
        _check_unit(self.Y)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (self.Y.shape[1],):
            raise ParameterError("one label per query is required")
        if self.difficulty is None:
            self.difficulty = np.full(self.Y.shape[1], "unsplit", dtype=object)
        self.difficulty = np.asarray(self.difficulty, dtype=object)

    @property
    def genuine(self):
        return self.labels != IMPOSTOR

    def subset(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return QuerySet(self.Y[:, mask], self.labels[mask], self.difficulty[mask],
                        cosines=None if self.cosines is None else self.cosines[mask])


def _normalize(G):
    return G / np.linalg.norm(G, axis=0)


def gen_synthetic(d, N, sigma, impostors, seed):
    """Gaussian templates, one noisy genuine query per identity, fresh impostors.

    The noise vector has i.i.d. ``N(0, 1/d)`` entries, so its expected squared
    norm is one and the genuine cosine concentrates near ``1/sqrt(1+sigma^2)``.

    Returns
    -------
    templates : TemplateMatrix
    queries : QuerySet
        The ``N`` genuine queries (in identity order) followed by the impostors.
    """
    if d < 1 or N < 1:
        raise ParameterError(f"need d, N >= 1, got d={d}, N={N}")
    if sigma < 0 or impostors < 0:
        raise ParameterError("sigma and impostors must be nonnegative")
    rng = np.random.default_rng(seed)
    X = _normalize(rng.standard_normal((d, N)))
    noise = rng.standard_normal((d, N)) / np.sqrt(d)
    genuine = _normalize(X + sigma * noise)
    fake = _normalize(rng.standard_normal((d, impostors)))
    Y = np.concatenate([genuine, fake], axis=1)
    labels = np.concatenate([np.arange(N), np.full(impostors, IMPOSTOR)])
    return TemplateMatrix(X), QuerySet(Y, labels)


def partition_groups(N, m, seed):
    """Randomly assign ``N`` individuals to groups of ``m``.

    A seeded permutation is cut into consecutive chunks of ``m``; when ``m``
    does not divide ``N`` the last group is shorter.
    """
    if m < 1 or m > N:
        raise ParameterError(f"group size m={m} must lie in [1, N={N}]")
    perm = np.random.default_rng(seed).permutation(N)
    return GroupPartition.from_groups([perm[i:i + m] for i in range(0, N, m)], N)


def save_descriptors(templates, path):
    X = templates.X
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DESCRIPTOR_MAGIC, DESCRIPTOR_VERSION, X.shape[0], X.shape[1]))
        fh.write(np.asarray(X, dtype="<f4").tobytes(order="F"))
        fh.write(np.asarray(templates.ids, dtype="<u4").tobytes())


def load_descriptors(path):
    """Read a GMVD file into a :class:`TemplateMatrix`.

    Columns whose norm is off by more than ``UNIT_TOL`` are rescaled to unit
    norm; the others are kept bit-for-bit.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise FormatError(f"truncated header: {len(buf)} bytes", len(buf))
    magic, version, d, N = _HEADER.unpack_from(buf, 0)
    if magic != DESCRIPTOR_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {DESCRIPTOR_MAGIC!r}", 0)
    if version != DESCRIPTOR_VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if d == 0 or N == 0:
        raise FormatError(f"empty matrix d={d} N={N}", 8)
    off = _HEADER.size
    expected = off + 4 * d * N + 4 * N
    if len(buf) < expected:
        raise FormatError(f"truncated payload: {len(buf)} of {expected} bytes", len(buf))
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes", expected)
    flat = np.frombuffer(buf, dtype="<f4", count=d * N, offset=off)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise FormatError("non-finite descriptor value", off + 4 * int(bad[0]))
    X = flat.reshape((d, N), order="F").astype(float)
    ids = np.frombuffer(buf, dtype="<u4", count=N, offset=off + 4 * d * N).astype(np.int64)
    norms = np.linalg.norm(X, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise FormatError(f"column {zero[0]} is all zeros", off + 4 * d * int(zero[0]))
    off_unit = np.abs(norms - 1.0) > UNIT_TOL
    X[:, off_unit] /= norms[off_unit]
    return TemplateMatrix(X, ids)


def queries_from_descriptors(descriptors, enrolled):
    """Queries from a GMVD matrix; labels not among enrolled ids are impostors."""
    labels = np.where(np.isin(descriptors.ids, enrolled.ids), descriptors.ids, IMPOSTOR)
    return QuerySet(descriptors.X, labels)


def split_queries(queries, enrolled, easy_threshold=0.95, hard_threshold=0.9):
    """Tag genuine queries easy/hard by cosine to their enrolled template.

    Cosine ``>= easy_threshold`` is easy, ``[hard_threshold, easy_threshold)``
    is hard, anything lower is dropped (counted in ``dropped``). Impostors
    stay ``"unsplit"``.
    """
    if not 0 < hard_threshold < easy_threshold <= 1:
        raise ParameterError(
            f"need 0 < hard ({hard_threshold}) < easy ({easy_threshold}) <= 1")
    column = {int(i): k for k, i in enumerate(enrolled.ids)}
    genuine = queries.genuine
    cos = np.full(queries.labels.size, np.nan)
    for k in np.flatnonzero(genuine):
        try:
            j = column[int(queries.labels[k])]
        except KeyError:
            raise ParameterError(f"query {k} refers to unknown identity {queries.labels[k]}") from None
        cos[k] = float(queries.Y[:, k] @ enrolled.X[:, j])
    difficulty = np.full(queries.labels.size, "unsplit", dtype=object)
    difficulty[genuine & (cos >= easy_threshold)] = "easy"
    difficulty[genuine & (cos >= hard_threshold) & (cos < easy_threshold)] = "hard"
    keep = ~genuine | (cos >= hard_threshold)
    out = QuerySet(queries.Y[:, keep], queries.labels[keep], difficulty[keep], cosines=cos[keep])
    out.dropped = int(np.count_nonzero(~keep))
    return out
