"""Estimators of the alpha-th frequency moment from projected values.

Every estimator has a batch form working on ``log x`` arrays of shape
``(..., k)`` (used by the Monte-Carlo harness) and a single-sketch form that
returns a :class:`MomentEstimate`.  All arithmetic stays in the log domain;
the final ``exp`` only happens when a caller asks for ``value``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, ModelViolationError, NumericalInstabilityWarning
from .stable_sampler import StableParams, derive_uniforms, sample_symmetric

GM_UNSTABLE_BELOW = 1e-5


class Estimator(enum.Enum):
    NEW = "new"
    GM = "gm"
    HM = "hm"
    MIN = "min"
    SYMMETRIC_GM = "sym"


@dataclass(frozen=True)
class MomentEstimate:
    log_value: float
    estimator: Estimator
    theo_rel_var: float | None = None
    flags: tuple = field(default_factory=tuple)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def resolve_alpha(alpha, delta=None) -> tuple[float, float]:
    """Return ``(alpha, delta)``; an explicit ``delta`` wins over ``1 - alpha``."""
    if isinstance(alpha, StableParams):
        return alpha.alpha, alpha.delta
    if delta is None:
        if alpha is None:
            raise ConfigurationError("alpha or delta is required")
        alpha = float(alpha)
        delta = 1.0 - alpha
    else:
        delta = float(delta)
        alpha = 1.0 - delta
    if not (0.0 < delta < 1.0):
        raise ConfigurationError(f"alpha must lie in (0, 1); got delta={delta!r}")
    return alpha, delta


def _log_positive(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] == 0:
        raise ConfigurationError("no projected values (k = 0)")
    if np.any(~(x > 0)):
        raise ModelViolationError(
            "projected values must be positive; the skewed-projection model requires a "
            "nonnegative signal at read time"
        )
    return np.log(x)


# -- closed-form variance factors (leading order in 1/k) ---------------------


def new_rel_var(delta: float, k: int) -> float:
    return delta * delta * (3.0 - 2.0 * delta) / k


def gm_rel_var(delta: float, k: int) -> float:
    return math.pi**2 / 6.0 * delta * (2.0 - delta) / k


def hm_factor(alpha, delta=None) -> float:
    """``2 Gamma(1+a)^2 / Gamma(1+2a) - 1``, the harmonic-mean variance factor."""
    if delta is None:
        alpha = float(alpha)
        if not 0.0 <= alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha!r}")
    else:
        alpha, delta = resolve_alpha(None, delta)
    return math.expm1(math.log(2.0) + 2.0 * math.lgamma(1.0 + alpha) - math.lgamma(1.0 + 2.0 * alpha))


def hm_factor_expansion(delta: float) -> float:
    """Second-order expansion of :func:`hm_factor` around alpha = 1."""
    return delta + delta * delta * (2.0 - math.pi**2 / 6.0)


def hm_rel_var(alpha: float, k: int, delta=None) -> float:
    return hm_factor(alpha, delta) / k


def symmetric_gm_log_constant(alpha: float, k: int) -> float:
    """``log E|S|^(alpha/k)`` for a standard symmetric alpha-stable ``S``.

    Uses the fractional-moment identity
    ``E|S|^lam = (2/pi) Gamma(lam) Gamma(1 - lam/alpha) sin(pi lam / 2)``.
    """
    if k < 2:
        raise ConfigurationError("the symmetric geometric-mean estimator needs k >= 2")
    lam = alpha / k
    return (
        math.log(2.0 / math.pi)
        + math.lgamma(lam)
        + math.lgamma(1.0 - 1.0 / k)
        + math.log(math.sin(0.5 * math.pi * lam))
    )


# -- batch (log-domain) forms -------------------------------------------------


def batch_log_new(log_x, alpha: float, delta: float, log_f1=0.0) -> np.ndarray:
    log_x = np.asarray(log_x, dtype=np.float64)
    k = log_x.shape[-1]
    e = -(alpha / delta) * (log_x - np.expand_dims(np.asarray(log_f1), -1))
    lse = logsumexp(e, axis=-1)
    return -delta * math.log(delta) + delta * (math.log(k) - lse) + alpha * np.asarray(log_f1)


def batch_log_gm(log_x, alpha: float, delta: float) -> np.ndarray:
    log_x = np.asarray(log_x, dtype=np.float64)
    k = log_x.shape[-1]
    bias = k * (math.lgamma(1.0 - alpha / k) - math.lgamma(1.0 - 1.0 / k))
    return bias + (alpha / k) * np.sum(log_x, axis=-1)


def batch_log_hm(log_x, alpha: float, delta: float) -> np.ndarray:
    log_x = np.asarray(log_x, dtype=np.float64)
    k = log_x.shape[-1]
    corr = math.log1p(-hm_factor(alpha, delta) / k)
    return math.log(k) - math.lgamma(1.0 + alpha) - logsumexp(-alpha * log_x, axis=-1) + corr


def batch_log_min(log_x, alpha: float, delta: float) -> np.ndarray:
    return alpha * np.min(np.asarray(log_x, dtype=np.float64), axis=-1)


def batch_log_symmetric_gm(log_abs_x, alpha: float, delta: float, log_calibration=None) -> np.ndarray:
    log_abs_x = np.asarray(log_abs_x, dtype=np.float64)
    k = log_abs_x.shape[-1]
    if log_calibration is None:
        log_calibration = symmetric_gm_log_constant(alpha, k)
    return (alpha / k) * np.sum(log_abs_x, axis=-1) - k * log_calibration


# -- single-sketch API --------------------------------------------------------


def estimate_new(x, alpha=None, f1: float = 1.0, *, delta=None) -> MomentEstimate:
    """Inverse-power-mean estimator with variance ``delta^2 (3 - 2 delta) / k``.

    ``f1`` (the exact first moment) only rescales the exponents before the
    log-sum-exp; it does not change the estimate mathematically.
    """
    alpha, delta = resolve_alpha(alpha, delta)
    log_x = _log_positive(x)
    if not f1 > 0:
        raise ModelViolationError(f"first moment must be positive, got {f1!r}")
    k = log_x.shape[-1]
    lv = float(batch_log_new(log_x, alpha, delta, math.log(f1)))
    return MomentEstimate(lv, Estimator.NEW, new_rel_var(delta, k))


def estimate_gm(x, alpha=None, *, delta=None) -> MomentEstimate:
    alpha, delta = resolve_alpha(alpha, delta)
    log_x = _log_positive(x)
    k = log_x.shape[-1]
    if k < 2:
        raise ConfigurationError("the geometric-mean estimator needs k >= 2")
    flags = ()
    if delta < GM_UNSTABLE_BELOW:
        warnings.warn(
            f"geometric-mean estimator is numerically unreliable for delta < {GM_UNSTABLE_BELOW:g} "
            f"(delta={delta:g})",
            NumericalInstabilityWarning,
            stacklevel=2,
        )
        flags = ("unstable",)
    lv = float(batch_log_gm(log_x, alpha, delta))
    return MomentEstimate(lv, Estimator.GM, gm_rel_var(delta, k), flags)


def estimate_hm(x, alpha=None, *, delta=None) -> MomentEstimate:
    alpha, delta = resolve_alpha(alpha, delta)
    log_x = _log_positive(x)
    k = log_x.shape[-1]
    if k < 2:
        raise ConfigurationError("the harmonic-mean estimator needs k >= 2")
    lv = float(batch_log_hm(log_x, alpha, delta))
    return MomentEstimate(lv, Estimator.HM, hm_rel_var(alpha, k, delta))


def estimate_min(x, alpha=None, *, delta=None) -> MomentEstimate:
    """``min_j x_j^alpha``; also defined at ``alpha = 1``."""
    if delta is None and alpha is not None and float(alpha) == 1.0:
        alpha, delta = 1.0, 0.0
    else:
        alpha, delta = resolve_alpha(alpha, delta)
    lv = float(batch_log_min(_log_positive(x), alpha, delta))
    return MomentEstimate(lv, Estimator.MIN, None)


def estimate_symmetric_gm(x, alpha=None, calibration=None, *, delta=None) -> MomentEstimate:
    """Geometric-mean estimator for symmetric stable projections.

    ``calibration`` is ``E|S|^(alpha/k)`` for a unit-scale symmetric draw; when
    omitted the closed-form fractional moment is used.
    """
    alpha, delta = resolve_alpha(alpha, delta)
    x = np.asarray(x, dtype=np.float64)
    k = x.shape[-1]
    if k < 2:
        raise ConfigurationError("the symmetric geometric-mean estimator needs k >= 2")
    if np.any(x == 0) or not np.all(np.isfinite(x)):
        raise ModelViolationError("symmetric projections must be finite and nonzero")
    if calibration is None:
        log_cal = symmetric_gm_log_constant(alpha, k)
    else:
        if not calibration > 0:
            raise ConfigurationError("calibration must be positive")
        log_cal = math.log(calibration)
    lv = float(batch_log_symmetric_gm(np.log(np.abs(x)), alpha, delta, log_cal))
    return MomentEstimate(lv, Estimator.SYMMETRIC_GM, None)


def calibrate_symmetric_gm(alpha, k: int, trials: int = 100_000, seed: int = 0, *, delta=None) -> float:
    """Monte-Carlo estimate of ``E|S|^(alpha/k)`` for unit-scale symmetric draws."""
    alpha, delta = resolve_alpha(alpha, delta)
    if k < 2:
        raise ConfigurationError("calibration needs k >= 2")
    params = StableParams(alpha=alpha, delta=delta)
    s = sample_symmetric(params, derive_uniforms(seed, np.arange(trials), 0))
    return float(np.mean(np.abs(s) ** (alpha / k)))


_BATCH = {
    Estimator.NEW: batch_log_new,
    Estimator.GM: batch_log_gm,
    Estimator.HM: batch_log_hm,
    Estimator.MIN: batch_log_min,
    Estimator.SYMMETRIC_GM: batch_log_symmetric_gm,
}


def theoretical_rel_var(method: Estimator, alpha: float, delta: float, k: int) -> float | None:
    method = Estimator(method)
    if method is Estimator.NEW:
        return new_rel_var(delta, k)
    if method is Estimator.GM:
        return gm_rel_var(delta, k)
    if method is Estimator.HM:
        return hm_rel_var(alpha, k, delta)
    return None


def batch_log_estimate(method, log_x, alpha: float, delta: float, log_f1=0.0) -> np.ndarray:
    """Dispatch to the batch form of ``method``; ``log_f1`` only affects ``new``."""
    method = Estimator(method)
    if method is Estimator.NEW:
        return batch_log_new(log_x, alpha, delta, log_f1)
    return _BATCH[method](log_x, alpha, delta)


def estimate(sketch, method="new") -> MomentEstimate:
    """Run ``method`` on a :class:`~ccsketch.sketch.CCSketch`."""
    from .stable_sampler import Skew

    method = Estimator(method)
    p = sketch.params
    wants_symmetric = method is Estimator.SYMMETRIC_GM
    if wants_symmetric != (p.skew is Skew.SYMMETRIC):
        raise ConfigurationError(
            f"estimator {method.value!r} does not apply to a {p.skew.value} sketch"
        )
    if method is Estimator.SYMMETRIC_GM:
        return estimate_symmetric_gm(sketch.x, delta=p.delta)
    sketch.check_positive()
    if method is Estimator.NEW:
        return estimate_new(sketch.x, f1=sketch.f1, delta=p.delta)
    if method is Estimator.GM:
        return estimate_gm(sketch.x, delta=p.delta)
    if method is Estimator.HM:
        return estimate_hm(sketch.x, delta=p.delta)
    return estimate_min(sketch.x, delta=p.delta)
