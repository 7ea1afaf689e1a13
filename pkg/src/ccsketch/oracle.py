"""Exact ground truth and the Monte-Carlo harness behind the statistical tests.

The harness works in first-moment-normalised units: every vector is divided
by its sum, so estimators return ``log(F_hat / F1^alpha)`` directly.  That
quantity is ``O(delta * H)`` and is exactly what the entropy formulas need,
so nothing is lost to round-off even at ``delta = 1e-10``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, ModelViolationError
from .estimators import (
    GM_UNSTABLE_BELOW,
    Estimator,
    batch_log_estimate,
    resolve_alpha,
    theoretical_rel_var,
)
from .sketch import SparseVector, project_dense
from .stable_sampler import (
    Skew,
    StableParams,
    _mix64,
    derive_uniforms,
    log_sample_skewed,
    sample_symmetric,
)

# (sparsity, Shannon entropy in bits) of eight word-count vectors; used to
# generate look-alike synthetic vectors.
WORD_PROFILES = {
    "TWIST": (0.004, 5.4873),
    "FRIDAY": (0.034, 7.0487),
    "FUN": (0.047, 7.6519),
    "BUSINESS": (0.126, 8.3995),
    "NAME": (0.144, 8.5162),
    "HAVE": (0.267, 8.9782),
    "THIS": (0.423, 9.3893),
    "A": (0.596, 9.5463),
}


def _positive_values(v: SparseVector) -> np.ndarray:
    vals = v.values[v.values > 0]
    if vals.size == 0:
        raise ModelViolationError("vector is identically zero")
    return vals


def exact_moment(v: SparseVector, alpha=None, *, delta=None) -> float:
    """``sum_i A[i]^alpha`` with compensated summation."""
    if delta is None and alpha is not None and alpha >= 1:
        a = float(alpha)
    else:
        a, _ = resolve_alpha(alpha, delta)
    vals = _positive_values(v)
    return math.fsum(np.exp(a * np.log(vals)))


def probabilities(v: SparseVector) -> np.ndarray:
    vals = _positive_values(v)
    return vals / math.fsum(vals)


def exact_log_ratio(v: SparseVector, delta: float) -> float:
    """``log(F_alpha / F_1^alpha)`` for ``alpha = 1 - delta``.

    Uses ``sum p^alpha = 1 + sum p * expm1(-delta log p)`` so the result keeps
    full relative precision for any ``delta``.
    """
    p = probabilities(v)
    return math.log1p(math.fsum(p * np.expm1(-delta * np.log(p))))


def exact_shannon(v: SparseVector, base: float = math.e) -> float:
    p = probabilities(v)
    return -math.fsum(p * np.log(p)) / math.log(base)


def exact_renyi(v: SparseVector, alpha=None, base: float = math.e, *, delta=None) -> float:
    _, delta = resolve_alpha(alpha, delta)
    return exact_log_ratio(v, delta) / delta / math.log(base)


def exact_tsallis(v: SparseVector, alpha=None, *, delta=None) -> float:
    _, delta = resolve_alpha(alpha, delta)
    p = probabilities(v)
    return math.fsum(p * np.expm1(-delta * np.log(p))) / delta


def synthetic_vector(
    d: int,
    sparsity: float,
    entropy_bits: float,
    seed: int = 0,
    name: str = "",
) -> SparseVector:
    """Zipf-shaped nonnegative vector with a prescribed sparsity and entropy.

    The Zipf exponent is solved for so the Shannon entropy (bits) matches
    ``entropy_bits`` to ~1e-10; nonzero positions are scattered uniformly.
    """
    nnz = max(1, int(round(sparsity * d)))
    if not 0 < entropy_bits < math.log2(nnz):
        raise ConfigurationError(
            f"entropy {entropy_bits} bits not reachable with {nnz} nonzeros"
        )
    log_rank = np.log(np.arange(1, nnz + 1, dtype=np.float64))

    def entropy_gap(s):
        w = np.exp(-s * log_rank - np.max(-s * log_rank))
        p = w / w.sum()
        return -np.sum(p * np.log2(p)) - entropy_bits

    s = brentq(entropy_gap, 0.0, 50.0, xtol=1e-13)
    w = np.exp(-s * log_rank)
    values = 1000.0 * w / w[-1] if w[-1] > 0 else 1000.0 * w / w.min()
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(d, size=nnz, replace=False))
    return SparseVector(idx, rng.permutation(values), d=d, name=name)


def profile_vector(name: str, d: int = 16384, seed: int = 0) -> SparseVector:
    sparsity, bits = WORD_PROFILES[name]
    return synthetic_vector(d, sparsity, bits, seed=seed, name=name)


# -- Monte-Carlo harness ------------------------------------------------------


@dataclass
class MCConfig:
    vector: SparseVector
    k: int
    delta: float
    estimator: Estimator = Estimator.NEW
    trials: int = 10_000
    base_seed: int = 0
    target: str = "moment"  # or "entropy"
    via: str = "tsallis"  # entropy formula: "tsallis" or "renyi"
    base: float = math.e
    mode: str = "stable"  # "stable" (distributional shortcut) or "projection"

    def __post_init__(self):
        self.estimator = Estimator(self.estimator)
        if self.trials < 100:
            raise ConfigurationError("run_mc needs at least 100 trials")
        if self.k < 1:
            raise ConfigurationError("k must be positive")
        if not 0 < self.delta < 1:
            raise ConfigurationError("delta must lie in (0, 1)")
        if self.target not in ("moment", "entropy"):
            raise ConfigurationError(f"unknown target {self.target!r}")
        if self.via not in ("tsallis", "renyi"):
            raise ConfigurationError(f"unknown entropy formula {self.via!r}")
        if self.mode not in ("stable", "projection"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")


@dataclass
class MCReport:
    trials: int
    truth: float
    mean: float
    normalized_mse: float
    normalized_bias: float
    normalized_var: float
    median_abs_error: float
    percentiles: dict
    failures: int = 0
    theo_rel_var: float | None = None
    flags: tuple = ()
    estimates: np.ndarray = field(default=None, repr=False)


def trial_seed(base_seed: int, trial: int) -> int:
    """Per-trial sketch seed derived from ``(base_seed, trial)``."""
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64(base_seed % 2**64) ^ _mix64(np.uint64(trial) + np.uint64(0x632BE59BD9B4E019)))
    return int(h)


def _rel_log_samples(cfg: MCConfig, lr: float, start: int, stop: int) -> np.ndarray:
    """``log |x| - log F1`` for trials ``[start, stop)``, shape ``(stop-start, k)``."""
    alpha, delta = 1.0 - cfg.delta, cfg.delta
    skewed = cfg.estimator is not Estimator.SYMMETRIC_GM
    params = StableParams.from_delta(delta, Skew.MAXIMALLY_SKEWED if skewed else Skew.SYMMETRIC)
    if cfg.mode == "stable":
        # x_j has the law of F_alpha^(1/alpha) * (unit draw)
        u = derive_uniforms(cfg.base_seed, np.arange(start, stop)[:, None], np.arange(cfg.k)[None, :])
        unit = log_sample_skewed(params, u) if skewed else np.log(np.abs(sample_symmetric(params, u)))
        return lr / alpha + unit
    out = np.empty((stop - start, cfg.k))
    for row, t in enumerate(range(start, stop)):
        s = project_dense(cfg.vector, cfg.k, params, trial_seed(cfg.base_seed, t))
        with np.errstate(divide="ignore", invalid="ignore"):
            out[row] = np.log(np.abs(s.x)) - math.log(s.f1)
    return out


def run_mc(cfg: MCConfig, *, keep_estimates: bool = False, chunk_elems: int = 1 << 21) -> MCReport:
    """Deterministic Monte-Carlo evaluation of one (vector, k, delta, estimator) cell."""
    alpha, delta = 1.0 - cfg.delta, cfg.delta
    lr = exact_log_ratio(cfg.vector, delta)
    chunk = max(1, chunk_elems // cfg.k) if cfg.mode == "stable" else 256
    parts = []
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for start in range(0, cfg.trials, chunk):
            stop = min(cfg.trials, start + chunk)
            rel = _rel_log_samples(cfg, lr, start, stop)
            if cfg.estimator is not Estimator.SYMMETRIC_GM:
                rel = np.where(np.isfinite(rel), rel, np.nan)
            parts.append(batch_log_estimate(cfg.estimator, rel, alpha, delta))
    est_rel = np.concatenate(parts)  # log(F_hat / F1^alpha)
    ok = np.isfinite(est_rel)
    failures = int(np.sum(~ok))
    est_rel = est_rel[ok]

    flags = ()
    if cfg.estimator is Estimator.GM and delta < GM_UNSTABLE_BELOW:
        flags = ("unstable",)
    ln_base = math.log(cfg.base)
    if cfg.target == "moment":
        truth = math.exp(math.log(exact_moment(cfg.vector, delta=delta)))
        rel_err = np.expm1(est_rel - lr)
        values = truth * (1.0 + rel_err)
        ratio = 1.0 + rel_err
        theo = theoretical_rel_var(cfg.estimator, alpha, delta, cfg.k)
    else:
        truth = exact_shannon(cfg.vector, cfg.base)
        if cfg.via == "renyi":
            values = est_rel / delta / ln_base
        else:
            values = np.expm1(est_rel) / delta / ln_base
        rel_err = values / truth - 1.0
        ratio = values / truth
        theo = None
    n = values.size
    if n == 0:
        nan = float("nan")
        return MCReport(cfg.trials, truth, nan, nan, nan, nan, nan, {}, failures, theo, flags + ("failed",))
    qs = (0.05, 0.25, 0.5, 0.75, 0.95)
    pct = dict(zip(qs, np.quantile(ratio, qs).tolist()))
    return MCReport(
        trials=cfg.trials,
        truth=truth,
        mean=float(truth * (1.0 + np.mean(rel_err))),
        normalized_mse=float(np.mean(rel_err**2)),
        normalized_bias=float(np.mean(rel_err)),
        normalized_var=float(np.var(rel_err)),
        median_abs_error=float(np.median(np.abs(values - truth))),
        percentiles=pct,
        failures=failures,
        theo_rel_var=theo,
        flags=flags,
        estimates=values if keep_estimates else None,
    )
