"""Shannon entropy through Rényi and Tsallis entropies of order alpha -> 1.

Both entropies are functions of ``F_alpha / F_1^alpha``; working with its log
(``O(delta * H)``) keeps the ``1/delta`` amplification from eating precision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .estimators import Estimator, estimate
from .sketch import CCSketch

MAX_SKETCH_DELTA = 0.2


class Via(enum.Enum):
    RENYI = "renyi"
    TSALLIS = "tsallis"


class DeltaRule(enum.Enum):
    ITW08 = "itw08"
    FOCS08 = "focs08"


def _resolve_delta(alpha, delta):
    if delta is None:
        if alpha is None:
            raise ConfigurationError("alpha or delta is required")
        delta = 1.0 - float(alpha)
    delta = float(delta)
    if delta == 0.0:
        raise ConfigurationError("alpha = 1 is degenerate; use the Shannon entropy directly")
    return 1.0 - delta, delta


def _log_ratio(f_alpha, f1, alpha):
    if not (f_alpha > 0 and f1 > 0):
        raise ConfigurationError("moments must be positive")
    return math.log(f_alpha) - alpha * math.log(f1)


def renyi_from_log_ratio(log_ratio: float, delta: float, base: float = math.e) -> float:
    return log_ratio / delta / math.log(base)


def tsallis_from_log_ratio(log_ratio: float, delta: float, base: float = math.e) -> float:
    return math.expm1(log_ratio) / delta / math.log(base)


def renyi(f_alpha: float, f1: float, alpha=None, base: float = math.e, *, delta=None) -> float:
    """``log(F_alpha / F_1^alpha) / (1 - alpha)`` in the requested log base."""
    alpha, delta = _resolve_delta(alpha, delta)
    return renyi_from_log_ratio(_log_ratio(f_alpha, f1, alpha), delta, base)


def tsallis(f_alpha: float, f1: float, alpha=None, base: float = math.e, *, delta=None) -> float:
    """``(F_alpha / F_1^alpha - 1) / (1 - alpha)``.

    ``base`` divides by ``log(base)`` so the value is comparable with a
    Shannon entropy in that base; the natural-log form is the textbook one.
    """
    alpha, delta = _resolve_delta(alpha, delta)
    return tsallis_from_log_ratio(_log_ratio(f_alpha, f1, alpha), delta, base)


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    via: Via
    estimator: Estimator
    delta: float
    base: float
    diagnostics: tuple = ()


def shannon_from_sketch(
    s: CCSketch,
    method="new",
    via=Via.TSALLIS,
    base: float = math.e,
) -> EntropyEstimate:
    """Shannon-entropy estimate from a sketch with alpha close to 1."""
    via = Via(via)
    method = Estimator(method)
    delta = s.params.delta
    if delta > MAX_SKETCH_DELTA:
        raise ConfigurationError(
            f"entropy needs alpha close to 1 (delta <= {MAX_SKETCH_DELTA}), sketch has delta={delta}"
        )
    if not s.f1 > 0:
        raise ConfigurationError("sketch is empty (first moment is zero)")
    m = estimate(s, method)
    log_ratio = m.log_value - s.params.alpha * math.log(s.f1)
    if via is Via.RENYI:
        value = renyi_from_log_ratio(log_ratio, delta, base)
    else:
        value = tsallis_from_log_ratio(log_ratio, delta, base)
    diag = list(m.flags)
    if value < 0:
        diag.append("below-zero")
    elif value > math.log(s.d) / math.log(base):
        diag.append("above-log-domain")
    return EntropyEstimate(value, via, method, delta, base, tuple(diag))


# FOCS08 data points: (nu / ln m, delta) -> power law through both
_FOCS_X0 = 0.01 / (64 * math.log(2))
_FOCS_Y0 = 7e-6
_FOCS_EXP = math.log(1e-4 / 7e-6) / math.log((0.1 / math.log(1e6)) / _FOCS_X0)


def choose_delta(d: int, m: int, nu: float, variant=DeltaRule.ITW08) -> float:
    """Delta that earlier entropy algorithms need for additive accuracy ``nu``.

    ``FOCS08`` is a power-law fit through two published operating points, not
    the original derivation; it ignores ``d``.
    """
    variant = DeltaRule(variant)
    if d < 2 or m < 2:
        raise ConfigurationError("domain size and stream length must be at least 2")
    if not 0 < nu < 1:
        raise ConfigurationError("nu must lie in (0, 1)")
    if variant is DeltaRule.ITW08:
        c = nu / (4.0 * math.log(d) * math.log(m))
        return c / (16.0 * math.log(1.0 / c))
    x = nu / math.log(m)
    return _FOCS_Y0 * (x / _FOCS_X0) ** _FOCS_EXP
