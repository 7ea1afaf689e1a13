"""Stable random variates for skewed (CC) and symmetric random projections.

Samples are produced with the Chambers-Mallows-Stuck construction from a pair
``(V, W)`` with ``V ~ Uniform(0, pi)`` and ``W ~ Exp(1)``.  The pair is derived
deterministically from ``(seed, i, j)`` by a counter-based 64-bit mixer, so the
projection entry ``r_ij`` can be regenerated on demand and the projection
matrix never has to be stored.

Everything is vectorised: ``i`` and ``j`` may be integer arrays and broadcast
against each other.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_TWO_M52 = 2.0**-52


class Skew(enum.Enum):
    MAXIMALLY_SKEWED = "skewed"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class StableParams:
    """Stability index of the projection law.

    ``delta = 1 - alpha`` is the primary quantity.  Build with
    :meth:`from_delta` when delta is tiny: ``1 - (1 - 1e-12)`` is not ``1e-12``
    in double precision.
    """

    alpha: float
    skew: Skew = Skew.MAXIMALLY_SKEWED
    delta: float = field(default=None)

    def __post_init__(self):
        alpha = float(self.alpha)
        if not (0.0 < alpha < 1.0) or math.isnan(alpha):
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.delta is None:
            object.__setattr__(self, "delta", 1.0 - alpha)
        elif not (0.0 < self.delta < 1.0):
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "skew", Skew(self.skew))

    @classmethod
    def from_delta(cls, delta: float, skew: Skew = Skew.MAXIMALLY_SKEWED) -> "StableParams":
        delta = float(delta)
        if not (0.0 < delta < 1.0):
            raise ConfigurationError(f"delta must lie in (0, 1), got {delta!r}")
        return cls(alpha=1.0 - delta, skew=skew, delta=delta)

    def with_skew(self, skew: Skew) -> "StableParams":
        return StableParams(alpha=self.alpha, skew=skew, delta=self.delta)


@dataclass(frozen=True)
class UniformPair:
    """``v`` in the open interval (0, pi) and ``w`` > 0 (arrays or scalars)."""

    v: np.ndarray
    w: np.ndarray


def _mix64(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finaliser: a bijection on 64-bit words with full avalanche.
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _open_unit(h: np.ndarray) -> np.ndarray:
    # (top 52 bits + 0.5) / 2**52 lies in [2**-53, 1 - 2**-53]; never 0 or 1.
    return ((h >> _S12).astype(np.float64) + 0.5) * _TWO_M52


def derive_uniforms(seed: int, i, j) -> UniformPair:
    """Deterministic ``(V, W)`` for projection entry ``(i, j)`` under ``seed``."""
    with np.errstate(over="ignore"):
        key = _mix64(np.asarray(seed % 2**64, dtype=np.uint64) ^ _STREAM)
        ii = np.asarray(i).astype(np.uint64)
        jj = np.asarray(j).astype(np.uint64)
        row = _mix64(key + ii * _GOLDEN)
        base = row + (jj << np.uint64(1)) * _STREAM
        h_v = _mix64(base)
        h_w = _mix64(base + _STREAM)
    v = math.pi * _open_unit(h_v)
    w = -np.log(_open_unit(h_w))
    return UniformPair(v=v, w=w)


def log_sample_skewed(params: StableParams, u: UniformPair) -> np.ndarray:
    """``log Z`` for the maximally-skewed law, accurate for delta down to ~1e-300.

    The leading factor ``sin(alpha V) / sin V`` is evaluated as
    ``log1p(cos(dV) - 1 - cot(V) sin(dV))`` so that nothing cancels when delta
    is tiny.
    """
    a, d = params.alpha, params.delta
    v = np.asarray(u.v, dtype=np.float64)
    w = np.asarray(u.w, dtype=np.float64)
    dv = d * v
    half = np.sin(0.5 * dv)
    lead = np.log1p(-2.0 * half * half - np.sin(dv) / np.tan(v))
    tail = (d / a) * (np.log(np.sin(dv)) - np.log(np.sin(v)) - np.log(w))
    return lead + tail


def sample_skewed(params: StableParams, u: UniformPair) -> np.ndarray:
    """Positive draw from S(alpha, beta=1, cos(pi alpha / 2))."""
    if params.skew is not Skew.MAXIMALLY_SKEWED:
        raise ConfigurationError("sample_skewed requires maximally-skewed params")
    return np.exp(log_sample_skewed(params, u))


def direct_skewed(params: StableParams, u: UniformPair) -> np.ndarray:
    """Straight transcription of the CMS formula; reference for moderate delta only."""
    a, d = params.alpha, params.delta
    v, w = np.asarray(u.v), np.asarray(u.w)
    return np.sin(a * v) / np.sin(v) ** (1.0 / a) * (np.sin(v * d) / w) ** (d / a)


def sample_symmetric(params: StableParams, u: UniformPair) -> np.ndarray:
    """Standard symmetric alpha-stable draw (characteristic function exp(-|t|^alpha))."""
    a, d = params.alpha, params.delta
    uu = np.asarray(u.v, dtype=np.float64) - 0.5 * math.pi
    w = np.asarray(u.w, dtype=np.float64)
    s = np.sin(a * uu)
    log_mag = (
        np.log(np.abs(s))
        - np.log(np.cos(uu)) / a
        + (d / a) * (np.log(np.cos(d * uu)) - np.log(w))
    )
    return np.sign(s) * np.exp(log_mag)


def projection_entries(params: StableParams, seed: int, i, j) -> np.ndarray:
    """``r_ij`` for the sketch family selected by ``params.skew``."""
    u = derive_uniforms(seed, i, j)
    if params.skew is Skew.MAXIMALLY_SKEWED:
        return sample_skewed(params, u)
    return sample_symmetric(params, u)
