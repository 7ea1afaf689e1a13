"""Distribution functions of the maximally-skewed stable law used by CC.

``Z ~ S(alpha < 1, beta = 1, cos(pi alpha / 2))`` satisfies
``Z^(-alpha/delta) = W / g(V; delta)`` with ``W ~ Exp(1)`` and
``V ~ Uniform(0, pi)``.  Conditioning on ``V`` gives the CDF as a one
dimensional integral over ``theta`` and the Laplace transform of
``Z^(-alpha/delta)`` in the same way.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, poch

from .errors import ConfigurationError, ConvergenceError

CDF_ABS_TOL = 1e-10
# sup-norm agreement between exact and approximate CDF counted as "very close"
APPROX_CDF_SUP_TOL = 0.01


def _split(alpha, delta):
    if delta is None:
        alpha = float(alpha)
        delta = 1.0 - alpha
    else:
        delta = float(delta)
        alpha = 1.0 - delta
    return alpha, delta


def _check_g_domain(delta):
    if not 0.0 < delta < 0.5:
        raise ConfigurationError(
            f"g(theta; delta) is only monotone/convex for 0 < delta < 0.5, got {delta!r}"
        )


def _log_g(theta, delta):
    """``log g(theta; delta)`` for any 0 < delta <= 1 (no domain check)."""
    theta = np.asarray(theta, dtype=np.float64)
    alpha = 1.0 - delta
    if delta == 1.0:
        return np.zeros_like(theta)
    if delta >= 0.5:
        return (
            (alpha / delta) * np.log(np.sin(alpha * theta))
            - np.log(np.sin(theta)) / delta
            + np.log(np.sin(delta * theta))
        )
    dt = delta * theta
    half = np.sin(0.5 * dt)
    log_ratio = np.log1p(-2.0 * half * half - np.sin(dt) / np.tan(theta))
    return log_ratio / delta - np.log(np.sin(alpha * theta)) + np.log(np.sin(dt))


def log_g(theta, delta: float) -> np.ndarray:
    _check_g_domain(delta)
    return _log_g(theta, delta)


def g_eval(theta, delta: float) -> np.ndarray:
    """``[sin(a t)]^(a/d) / [sin t]^(1/d) * sin(d t)`` on ``0 < theta < pi``."""
    return np.exp(log_g(theta, delta))


def log_g_zero(delta: float) -> float:
    """``log(delta * alpha^(alpha/delta))``, the limit of ``log g`` at ``theta = 0+``."""
    alpha = 1.0 - delta
    if alpha == 0.0:
        return 0.0
    return math.log(delta) + (alpha / delta) * math.log(alpha)


def g_zero(delta: float) -> float:
    return math.exp(log_g_zero(delta))


def _exponent(theta, log_scale, delta):
    return log_scale + float(_log_g(theta, delta))


def _below(theta, log_scale, delta):
    # 1 - exp(-e^x), small where the exponent is very negative
    return -math.expm1(-math.exp(_exponent(theta, log_scale, delta)))


def _above(theta, log_scale, delta):
    e = _exponent(theta, log_scale, delta)
    if e > 709.0:
        return 0.0
    return math.exp(-math.exp(e))


def _crossing(log_scale, delta):
    """``theta`` where ``t^(-alpha/delta) g(theta) = 1`` (``log g`` is increasing)."""
    lo, hi = 1e-12, math.pi * (1.0 - 1e-15)
    if _exponent(lo, log_scale, delta) >= 0.0:
        return 0.0
    if _exponent(hi, log_scale, delta) <= 0.0:
        return math.pi
    return optimize.brentq(_exponent, lo, hi, args=(log_scale, delta), xtol=1e-14)


def cdf_exact(t, delta: float, *, epsabs: float = CDF_ABS_TOL) -> float:
    """``P(Z <= t)`` by adaptive quadrature over ``theta in (0, pi)``.

    The integrand ``exp(-t^(-alpha/delta) g(theta))`` switches from ~1 to ~0
    around a single crossing point; the range is split there and the left
    part is integrated through its complement so neither piece has to
    resolve a plateau next to a cliff.
    """
    _check_g_domain(delta)
    t = float(t)
    if t <= 0.0:
        return 0.0
    if math.isinf(t):
        return 1.0
    alpha = 1.0 - delta
    log_scale = -(alpha / delta) * math.log(t)
    tc = _crossing(log_scale, delta)
    total = tc
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for fn, lo, hi, sign in ((_below, 0.0, tc, -1.0), (_above, tc, math.pi, 1.0)):
            if hi <= lo:
                continue
            # geometric breakpoints resolve a transition much narrower than pi
            offsets = np.geomspace(1e-10, math.pi, 11)
            pts = np.concatenate([tc - offsets, tc + offsets])
            pts = pts[(pts > lo) & (pts < hi)]
            val, err = integrate.quad(
                fn, lo, hi, args=(log_scale, delta), epsabs=epsabs / 4, epsrel=1e-12, limit=400,
                points=pts if pts.size else None,
            )
            if not err <= epsabs:
                raise ConvergenceError(
                    f"CDF quadrature failed at t={t!r}, delta={delta!r}: error estimate {err:.3g}"
                )
            total += sign * val
    return min(1.0, max(0.0, total / math.pi))


def cdf_approx(t, delta: float):
    """CDF obtained by freezing ``g`` at its ``theta = 0+`` limit."""
    alpha = 1.0 - delta
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        log_scale = -(alpha / delta) * np.log(t) + log_g_zero(delta)
        out = np.exp(-np.exp(log_scale))
    out = np.where(t <= 0, 0.0, out)
    return out if out.ndim else float(out)


def log_pdf_approx(t, delta: float):
    """Log density of the approximate-CDF law ``Y``."""
    alpha = 1.0 - delta
    t = np.asarray(t, dtype=np.float64)
    log_t = np.log(t)
    log_cdf = -np.exp(-(alpha / delta) * log_t + log_g_zero(delta))
    log_alpha_term = 0.0 if alpha == 0 else math.log(alpha) / delta
    return log_cdf + log_alpha_term - log_t / delta


def mle_loglik(x, c_alpha: float, alpha=None, *, delta=None) -> float:
    """Log-likelihood of ``x_j = c Y_j`` with ``Y`` the approximate-CDF law."""
    alpha, delta = _split(alpha, delta)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0) or not c_alpha > 0:
        raise ConfigurationError("mle_loglik needs positive samples and scale")
    log_c = math.log(c_alpha) / alpha
    return float(np.sum(log_pdf_approx(np.exp(np.log(x) - log_c), delta)) - x.size * log_c)


def mle_log_estimate(x, alpha=None, *, delta=None) -> float:
    """``log`` of the maximum-likelihood estimate of ``c^alpha`` under the ``Y`` model."""
    from scipy.special import logsumexp

    alpha, delta = _split(alpha, delta)
    log_x = np.log(np.asarray(x, dtype=np.float64))
    k = log_x.size
    return (
        -delta * math.log(delta)
        - alpha * math.log(alpha)
        + delta * (math.log(k) - logsumexp(-(alpha / delta) * log_x))
    )


def log_neg_moment(lam: float, alpha=None, f_alpha: float = 1.0, *, delta=None) -> float:
    """``log E(X^lam)`` for ``X ~ S(alpha, 1, F cos(pi alpha / 2))``, ``lam < alpha``."""
    alpha, delta = _split(alpha, delta)
    if not lam < alpha:
        raise ConfigurationError(f"moment order must be below alpha={alpha}, got {lam!r}")
    a = 1.0 - lam
    m = lam - lam / alpha  # Gamma(1 - lam/alpha) / Gamma(1 - lam) = poch(1 - lam, m)
    ratio = poch(a, m)
    if np.isfinite(ratio) and ratio > 0:
        log_ratio = math.log(ratio)
    else:
        log_ratio = float(gammaln(1.0 - lam / alpha) - gammaln(a))
    return (lam / alpha) * math.log(f_alpha) + log_ratio


def neg_moment(lam: float, alpha=None, f_alpha: float = 1.0, *, delta=None) -> float:
    return math.exp(log_neg_moment(lam, alpha, f_alpha, delta=delta))


def laplace_inverse_power(t: float, delta: float) -> tuple[float, float]:
    """``E exp(-t Y)`` and its ``t``-derivative for ``Y = Z^(-alpha/delta)``.

    Valid for ``t > -g(0+)``; negative ``t`` gives the moment generating
    function.  Evaluated as ``E_V[g / (g + t)]`` by quadrature, independently
    of any series expansion.
    """
    lg0 = log_g_zero(delta)
    if t <= -math.exp(lg0):
        raise ConfigurationError("moment generating function diverges for t <= -g(0+)")

    def ratio(theta):
        # t / g(theta) computed in log space
        return t * math.exp(-float(_log_g(theta, delta)))

    def f(theta):
        return 1.0 / (1.0 + ratio(theta))

    def fprime(theta):
        r = 1.0 + ratio(theta)
        return -math.exp(-float(_log_g(theta, delta))) / (r * r)

    kw = dict(epsabs=1e-14, epsrel=1e-13, limit=400)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val = sum(integrate.quad(f, lo, hi, **kw)[0] for lo, hi in ((0, 1.0), (1.0, math.pi)))
            der = sum(integrate.quad(fprime, lo, hi, **kw)[0] for lo, hi in ((0, 1.0), (1.0, math.pi)))
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"Laplace-transform quadrature failed at t={t!r}: {exc}") from exc
    return val / math.pi, der / math.pi
