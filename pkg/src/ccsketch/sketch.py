"""Linear sketch ``X = A_t R`` maintained under Turnstile updates.

Besides the ``k`` projected accumulators the sketch carries an exact running
sum of all increments, i.e. the first frequency moment, which the inverse-power
estimator uses for scaling.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    ConfigurationError,
    IncompatibleSketchError,
    ModelViolationError,
    StreamCorruptionError,
)
from .stable_sampler import Skew, StableParams, projection_entries

MAGIC = b"CCSK"
FORMAT_VERSION = 1
# magic, version, skew, flags, k, alpha, delta, seed, d, f1
_HEADER = struct.Struct("<4sHBBIddQQd")
_SKEW_CODES = {Skew.MAXIMALLY_SKEWED: 0, Skew.SYMMETRIC: 1}
_CODE_SKEWS = {v: k for k, v in _SKEW_CODES.items()}
_CHUNK = 4096


@dataclass(frozen=True)
class StreamUpdate:
    index: int
    amount: float


@dataclass
class SparseVector:
    """Nonnegative signal given as parallel ``indices`` / ``values`` arrays."""

    indices: np.ndarray
    values: np.ndarray
    d: int
    name: str = ""

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise ConfigurationError("indices and values must be 1-d arrays of equal length")
        if self.d < 1:
            raise ConfigurationError(f"domain size must be positive, got {self.d}")
        if self.indices.size:
            if self.indices.min() < 0 or self.indices.max() >= self.d:
                raise StreamCorruptionError("vector index outside [0, d)")
            if np.unique(self.indices).size != self.indices.size:
                raise ConfigurationError("vector indices must be unique")
        if np.any(self.values < 0):
            raise ModelViolationError("negative coordinate: strict-Turnstile violated at read time")

    @classmethod
    def from_dense(cls, values, name: str = "") -> "SparseVector":
        values = np.asarray(values, dtype=np.float64)
        nz = np.flatnonzero(values)
        return cls(nz, values[nz], d=values.size, name=name)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    @property
    def sparsity(self) -> float:
        return self.nnz / self.d

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.d)
        out[self.indices] = self.values
        return out


class CCSketch:
    """k-dimensional stable projection of a Turnstile stream.

    Parameters
    ----------
    k : int
        Number of projections (sample size of the estimators).
    params : StableParams
        Stability index and projection family (skewed for CC, symmetric for
        the baseline).
    seed : int
        64-bit key from which every ``r_ij`` is regenerated.
    d : int
        Domain size; updates must address ``0 <= index < d``.
    kahan : bool
        Use compensated summation for the accumulators.
    """

    def __init__(self, k: int, params: StableParams, seed: int, d: int, *, kahan: bool = False):
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise ConfigurationError(f"k must be a positive integer, got {k!r}")
        if not isinstance(params, StableParams):
            params = StableParams(params)
        if d < 1:
            raise ConfigurationError(f"domain size must be positive, got {d!r}")
        self.k = int(k)
        self.params = params
        self.seed = int(seed) % 2**64
        self.d = int(d)
        self.kahan = kahan
        self.x = np.zeros(self.k)
        self.f1 = 0.0
        self._comp = np.zeros(self.k) if kahan else None
        self._j = np.arange(self.k)

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def delta(self) -> float:
        return self.params.delta

    def config(self) -> tuple:
        p = self.params
        return (self.k, p.alpha, p.delta, p.skew, self.seed, self.d)

    def entries(self, index: int) -> np.ndarray:
        """Row ``r_{index, :}`` of the (never materialised) projection matrix."""
        return projection_entries(self.params, self.seed, index, self._j)

    def _add(self, contrib: np.ndarray) -> None:
        if self._comp is None:
            self.x += contrib
            return
        y = contrib - self._comp
        t = self.x + y
        self._comp = (t - self.x) - y
        self.x = t

    def update(self, index: int, amount: float) -> None:
        if not 0 <= index < self.d:
            raise StreamCorruptionError(f"update index {index} outside [0, {self.d})")
        self._add(amount * self.entries(index))
        self.f1 += amount

    def apply(self, updates: Iterable) -> "CCSketch":
        for u in updates:
            if isinstance(u, StreamUpdate):
                self.update(u.index, u.amount)
            else:
                self.update(*u)
        return self

    def check_positive(self) -> None:
        """Raise if the skewed sketch cannot come from a nonnegative signal."""
        if self.params.skew is Skew.MAXIMALLY_SKEWED and np.any(self.x <= 0):
            bad = int(np.sum(self.x <= 0))
            raise ModelViolationError(
                f"{bad} of {self.k} projections are nonpositive; the signal has negative "
                "coordinates at read time or is empty"
            )

    def copy(self) -> "CCSketch":
        out = CCSketch(self.k, self.params, self.seed, self.d, kahan=self.kahan)
        out.x = self.x.copy()
        out.f1 = self.f1
        if self._comp is not None:
            out._comp = self._comp.copy()
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, CCSketch):
            return NotImplemented
        return (
            self.config() == other.config()
            and self.f1 == other.f1
            and np.array_equal(self.x, other.x)
        )

    def __repr__(self) -> str:
        return (
            f"CCSketch(k={self.k}, alpha={self.alpha!r}, skew={self.params.skew.value}, "
            f"seed={self.seed}, d={self.d}, f1={self.f1!r})"
        )

    def to_bytes(self) -> bytes:
        """Versioned little-endian layout; see ``MAGIC`` / ``_HEADER``."""
        p = self.params
        head = _HEADER.pack(
            MAGIC, FORMAT_VERSION, _SKEW_CODES[p.skew], 0,
            self.k, p.alpha, p.delta, self.seed, self.d, self.f1,
        )
        return head + self.x.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CCSketch":
        if len(blob) < _HEADER.size:
            raise ConfigurationError("truncated sketch header")
        magic, version, skew, _flags, k, alpha, delta, seed, d, f1 = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise ConfigurationError("not a sketch file (bad magic)")
        if version != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported sketch format version {version}")
        body = blob[_HEADER.size:]
        if len(body) != 8 * k:
            raise ConfigurationError(f"sketch body holds {len(body)} bytes, expected {8 * k}")
        params = StableParams(alpha=alpha, skew=_CODE_SKEWS[skew], delta=delta)
        out = cls(k, params, seed, d)
        out.x = np.frombuffer(body, dtype="<f8").astype(np.float64)
        out.f1 = f1
        return out

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "CCSketch":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def new_sketch(k: int, params: StableParams, seed: int, d: int, **kw) -> CCSketch:
    return CCSketch(k, params, seed, d, **kw)


def project_dense(v: SparseVector, k: int, params: StableParams, seed: int) -> CCSketch:
    """Sketch a static vector.

    Entries are folded in index order with the same arithmetic as
    :meth:`CCSketch.update`, so the result is bit-identical to streaming the
    entries one by one.
    """
    if np.any(v.values < 0):
        raise ModelViolationError("negative coordinate: strict-Turnstile violated at read time")
    s = CCSketch(k, params, seed, v.d)
    j = np.arange(k)
    for start in range(0, v.indices.size, _CHUNK):
        idx = v.indices[start:start + _CHUNK]
        vals = v.values[start:start + _CHUNK]
        rows = projection_entries(s.params, s.seed, idx[:, None], j[None, :])
        for a, r in zip(vals, rows):
            s.x += float(a) * r
            s.f1 += float(a)
    return s


def merge(a: CCSketch, b: CCSketch) -> CCSketch:
    """Sketch of the concatenated streams (projections are linear)."""
    if a.config() != b.config():
        raise IncompatibleSketchError(
            f"cannot merge sketches with different configuration: {a!r} vs {b!r}"
        )
    out = a.copy()
    out._add(b.x)
    out.f1 = a.f1 + b.f1
    return out


def sketch_stream(updates: Iterable, k: int, params: StableParams, seed: int, d: int) -> CCSketch:
    return CCSketch(k, params, seed, d).apply(updates)
