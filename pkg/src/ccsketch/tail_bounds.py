"""Chernoff tail-bound constants for the inverse-power-mean estimator.

For ``Y = Z^(-alpha/delta)`` and ``s = t e / delta`` the moment generating
function has the power series ``sum_n (+-s)^n p_n`` with

    p_n = prod_{j=0}^{n-1} (n - j delta) / ((n - j) e),

which keeps every coefficient below ``1/sqrt(2 pi n)``.  The right/left tail
exponents are

    right:  -log A(s) - s (1 + eps)^(-1/delta) / e,   A(s) = sum (-s)^n p_n
    left:   -log B(s) + s (1 - eps)^(-1/delta) / e,   B(s) = sum  s^n  p_n

Both are concave in ``s``; the optimum is the root of the derivative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, ConvergenceError, RegimeError
from .stable_dist import laplace_inverse_power

N_MAX = 500
REL_TRUNC = 1e-15


class Tail(enum.Enum):
    RIGHT = "right"
    LEFT = "left"


class SeriesSign(enum.Enum):
    ALTERNATING = "alternating"
    POSITIVE = "positive"


@dataclass(frozen=True)
class TailBoundResult:
    tail: Tail
    epsilon: float
    delta: float
    s_star: float
    exponent: float  # eps^2 / G
    optimal: bool = True
    method: str = "series"

    @property
    def t_star(self) -> float:
        return self.s_star * self.delta / math.e

    @property
    def g_over_delta_sq(self) -> float:
        if self.exponent == math.inf:
            return 0.0
        return (self.epsilon / self.delta) ** 2 / self.exponent

    @property
    def g(self) -> float:
        return self.g_over_delta_sq * self.delta**2

    def bound(self, k: int) -> float:
        """``exp(-k eps^2 / G)``."""
        return math.exp(-k * self.exponent)


def _check_delta(delta):
    if not 0.0 < delta <= 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1], got {delta!r}")


def product_term(n: int, delta: float) -> float:
    """``p_n``, accumulated factor by factor in the log domain."""
    if n < 0:
        raise ConfigurationError("n must be nonnegative")
    alpha = 1.0 - delta
    acc = 0.0
    for j in range(n):
        # (n - j delta) / (n - j) = 1 + j alpha / (n - j)
        acc += math.log1p(j * alpha / (n - j))
    return math.exp(acc - n)


@lru_cache(maxsize=64)
def _log_p(delta: float, n_max: int) -> np.ndarray:
    alpha = 1.0 - delta
    out = np.zeros(n_max + 1)
    for n in range(1, n_max + 1):
        j = np.arange(n)
        out[n] = math.fsum(np.log1p(j * alpha / (n - j))) - n
    out.setflags(write=False)
    return out


def radius(delta: float) -> float:
    """Radius of convergence of the series in ``s``: ``e * alpha^(alpha/delta)``."""
    alpha = 1.0 - delta
    if alpha == 0.0:
        return math.e
    return math.e * math.exp((alpha / delta) * math.log(alpha))


def _series(s: float, delta: float, sign: SeriesSign, n_max: int = N_MAX, order: int = 2):
    """Series value and its first ``order`` derivatives in ``s``."""
    if not s > 0:
        raise ConfigurationError("s must be positive")
    log_p = _log_p(delta, n_max)
    n = np.arange(n_max + 1, dtype=np.float64)
    mag = np.exp(n * math.log(s) + log_p)
    if sign is SeriesSign.ALTERNATING:
        mag = np.where(n % 2 == 1, -mag, mag)
    total = math.fsum(mag)
    tail = abs(mag[-1])
    if not (tail < REL_TRUNC * abs(total)) or not np.isfinite(total):
        raise ConvergenceError(
            f"series did not converge within {n_max} terms (s={s!r}, delta={delta!r})"
        )
    d1 = math.fsum(n[1:] * mag[1:]) / s
    d2 = math.fsum(n[2:] * (n[2:] - 1) * mag[2:]) / (s * s)
    return (total, d1, d2)[: order + 1]


def series_value(s: float, delta: float, sign=SeriesSign.ALTERNATING, n_max: int = N_MAX):
    """``sum_{n>=0} (+-s)^n p_n`` and its derivative with respect to ``s``."""
    _check_delta(delta)
    total, d1 = _series(s, delta, SeriesSign(sign), n_max, order=1)
    return total, d1


def _log_q(tail: Tail, epsilon: float, delta: float) -> float:
    if tail is Tail.RIGHT:
        return -math.log1p(epsilon) / delta
    return -math.log1p(-epsilon) / delta


def _series_objective(tail, s, delta, log_q):
    """Chernoff exponent at ``s`` and its first two derivatives (series route)."""
    sign = SeriesSign.ALTERNATING if tail is Tail.RIGHT else SeriesSign.POSITIVE
    v, d1, d2 = _series(s, delta, sign)
    lin = math.exp(log_q - 1.0)  # q / e
    if tail is Tail.RIGHT:
        f = -math.log(v) - s * lin
        fp = -d1 / v - lin
    else:
        f = -math.log(v) + s * lin
        fp = -d1 / v + lin
    fpp = -(d2 * v - d1 * d1) / (v * v)
    return f, fp, fpp


def _integral_objective(s, delta, log_q):
    """Right-tail exponent via the exact Laplace transform (any ``s > 0``)."""
    c = delta / math.e
    a, da = laplace_inverse_power(s * c, delta)
    lin = math.exp(log_q - 1.0)
    return -math.log(a) - s * lin, -c * da / a - lin


def tail_exponent(tail, epsilon: float, delta: float, s: float) -> float:
    """Chernoff exponent at an arbitrary ``s`` (any ``s`` gives a valid bound)."""
    tail = Tail(tail)
    log_q = _log_q(tail, epsilon, delta)
    if tail is Tail.LEFT and log_q - 1.0 + math.log(s) > 700:
        return math.inf
    try:
        return _series_objective(tail, s, delta, log_q)[0]
    except ConvergenceError:
        if tail is Tail.RIGHT:
            return _integral_objective(s, delta, log_q)[0]
        raise


def _series_cap(delta: float, sign: SeriesSign) -> float:
    """Largest ``s`` (on a geometric ladder towards the radius) where the series converges."""
    rho = radius(delta)
    hi = 0.999 * rho
    for _ in range(60):
        try:
            _series(hi, delta, sign, order=0)
            return hi
        except ConvergenceError:
            hi = rho - 1.5 * (rho - hi)
            if hi <= 0:
                break
    raise ConvergenceError(f"no convergent region found for delta={delta!r}")


def solve_tail(tail, epsilon: float, delta: float, *, xtol: float = 1e-15) -> TailBoundResult:
    """Optimal Chernoff exponent ``eps^2 / G`` for one tail.

    The stationarity condition is solved in ``s = t e / delta`` by Brent's
    method inside ``(1e-8 * cap, cap)`` where ``cap`` is the largest ``s`` at
    which the series converges.  When the right-tail optimum lies beyond
    ``cap`` the search continues on the exact Laplace transform.  When the
    left-tail optimum cannot be bracketed, the exponent at ``cap`` is
    returned with ``optimal=False`` (still a valid bound).
    """
    tail = Tail(tail)
    _check_delta(delta)
    if not epsilon > 0:
        raise ConfigurationError("epsilon must be positive")
    if tail is Tail.LEFT and not epsilon < 1:
        raise ConfigurationError("left-tail epsilon must lie in (0, 1)")
    log_q = _log_q(tail, epsilon, delta)
    sign = SeriesSign.ALTERNATING if tail is Tail.RIGHT else SeriesSign.POSITIVE
    cap = _series_cap(delta, sign)
    lo = 1e-8 * cap

    def deriv(s):
        return _series_objective(tail, s, delta, log_q)[1]

    if tail is Tail.LEFT and log_q - 1.0 + math.log(cap) > 700:
        return TailBoundResult(tail, epsilon, delta, cap, math.inf, optimal=False)

    if deriv(lo) <= 0:
        raise ConvergenceError("Chernoff objective is not increasing at the origin")
    if deriv(cap) < 0:
        s_star = brentq(deriv, lo, cap, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
        # one Newton polish on the analytic second derivative
        _, fp, fpp = _series_objective(tail, s_star, delta, log_q)
        if fpp < 0:
            cand = s_star - fp / fpp
            if lo < cand < cap and abs(deriv(cand)) < abs(fp):
                s_star = cand
        exponent = _series_objective(tail, s_star, delta, log_q)[0]
        return TailBoundResult(tail, epsilon, delta, s_star, exponent)

    if tail is Tail.LEFT:
        exponent = _series_objective(tail, cap, delta, log_q)[0]
        return TailBoundResult(tail, epsilon, delta, cap, exponent, optimal=False)

    # right tail: the optimum is beyond the series region; use the integral form
    def ideriv(s):
        return _integral_objective(s, delta, log_q)[1]

    hi = cap
    while ideriv(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            exponent = _integral_objective(hi, delta, log_q)[0]
            return TailBoundResult(tail, epsilon, delta, hi, exponent, optimal=False, method="integral")
    s_star = brentq(ideriv, cap, hi, xtol=1e-13, rtol=1e-13, maxiter=200)
    exponent = _integral_objective(s_star, delta, log_q)[0]
    return TailBoundResult(tail, epsilon, delta, s_star, exponent, method="integral")


def solve_tail_nu(tail, nu: float, delta: float) -> TailBoundResult:
    """:func:`solve_tail` with ``epsilon = nu * delta``."""
    return solve_tail(tail, nu * delta, delta)


def closed_form_delta1(tail, epsilon: float) -> float:
    """Exact exponent when ``delta = 1`` (``alpha = 0``)."""
    tail = Tail(tail)
    if tail is Tail.RIGHT:
        if not epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        return math.log1p(epsilon) - epsilon / (1.0 + epsilon)
    if not 0 < epsilon < 1:
        raise ConfigurationError("left-tail epsilon must lie in (0, 1)")
    return math.log1p(-epsilon) + epsilon / (1.0 - epsilon)


def asymptotic_g(delta: float) -> float:
    """Common ``nu -> 0`` limit of ``G_R / delta^2`` and ``G_L / delta^2``."""
    _check_delta(delta)
    return 6.0 - 4.0 * delta


class Regime(enum.Enum):
    CONSERVATIVE9 = 9
    SMALL_NU6 = 6


def sample_size(nu: float, fail_prob: float, regime=Regime.CONSERVATIVE9) -> int:
    """Projections needed for ``|F_hat - F| <= nu delta F`` with probability ``1 - fail_prob``."""
    if not (0 < nu < 1 and 0 < fail_prob < 1):
        raise ConfigurationError("nu and fail_prob must lie in (0, 1)")
    c = Regime(regime).value
    return math.ceil(c * math.log(2.0 / fail_prob) / (nu * nu))


def min_right_bound_exponent(epsilon: float, delta: float, k: int) -> float:
    """Log of the sample-minimum right-tail bound, dropping the O(delta^2) remainder."""
    if not epsilon > 0 or k < 1:
        raise ConfigurationError("need epsilon > 0 and k >= 1")
    if not 0 < delta <= 0.1:
        raise RegimeError("the sample-minimum bound is an asymptotic result for small delta")
    l1e = math.log1p(epsilon)
    denom = delta * math.log(delta) + l1e
    if denom <= 0:
        raise RegimeError(
            "delta*log(delta) + log(1+epsilon) <= 0: the sample-minimum bound needs a larger epsilon"
        )
    bracket = delta + delta / l1e + delta / denom
    return min(0.0, k * math.log(0.5) * bracket)


def min_right_bound(epsilon: float, delta: float, k: int) -> float:
    """Bound on ``P(F_min >= (1 + eps) F)``; in (0, 1]."""
    return max(math.exp(min_right_bound_exponent(epsilon, delta, k)), np.nextafter(0.0, 1.0))


def g_curve(nus, deltas):
    """Rows ``(nu, delta, G_R/delta^2, G_L/delta^2)`` for a grid of points."""
    rows = []
    for d in deltas:
        for nu in nus:
            gr = solve_tail_nu(Tail.RIGHT, nu, d).g_over_delta_sq
            gl = solve_tail_nu(Tail.LEFT, nu, d).g_over_delta_sq if nu * d < 1 else float("nan")
            rows.append((nu, d, gr, gl))
    return rows
