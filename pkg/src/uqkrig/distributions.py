"""One-dimensional marginal distributions parameterized from moments.

Five continuous families are supported: normal, lognormal, uniform,
weibull and gumbel.  Non-uniform families are constructed from a target
mean and standard deviation by moment matching; the uniform family is
constructed from its lower and upper limits.  Every marginal exposes
``pdf``, ``cdf`` and ``ppf`` (quantile function), all vectorized over
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtr

__all__ = ["Marginal", "U_EPS", "norm_cdf", "norm_ppf"]

KINDS = ("normal", "lognormal", "uniform", "weibull", "gumbel")

# Probabilities handed to ppf are clamped into [U_EPS, 1 - U_EPS] by
# callers; hypercube points never sit exactly on the boundary but
# optimizer probes and validation samples might.
U_EPS = 1e-12

_EULER_GAMMA = 0.5772156649015329

# Weibull shape bracket for the moment-matching root find.  The upper
# end must admit small coefficients of variation (cv ~ 1.28/k for large
# k, so k=200 reaches cv ~ 0.0064).
_WEIBULL_K_LO = 0.05
_WEIBULL_K_HI = 200.0


def norm_cdf(z):
    """Standard normal CDF."""
    return ndtr(z)


# Rational approximation coefficients (central region and tails) for the
# inverse standard normal CDF; accurate to ~1.2e-9 before refinement.
_PPF_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_PPF_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_PPF_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_PPF_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)


def norm_ppf(u):
    """Inverse standard normal CDF.

    A rational approximation (central region plus both tails) refined by
    one Halley step on the CDF residual, which brings the result to
    machine precision.  Inputs must lie strictly inside (0, 1).
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("probabilities must lie strictly inside (0, 1)")

    scalar = u.ndim == 0
    p = np.atleast_1d(u).astype(float)
    x = np.empty_like(p)

    p_low = 0.02425
    lo = p < p_low
    hi = p > 1.0 - p_low
    mid = ~(lo | hi)

    a, b, c, d = _PPF_A, _PPF_B, _PPF_C, _PPF_D
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        x[mid] = q * num / den
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        x[lo] = num / den
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - p[hi]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        x[hi] = -num / den

    # One Halley refinement on f(x) = Phi(x) - p.  The residual is
    # evaluated on the complement side for p > 1/2 (1 - p is exact
    # there), otherwise the subtraction near 1.0 destroys the tails.
    err = np.where(p > 0.5, (1.0 - p) - ndtr(-x), ndtr(x) - p)
    t = err * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    x = x - t / (1.0 + 0.5 * x * t)

    return float(x[0]) if scalar else x.reshape(u.shape)


def _weibull_cv_sq(k):
    """Squared coefficient of variation of a Weibull with shape k."""
    return math.exp(gammaln(1.0 + 2.0 / k) - 2.0 * gammaln(1.0 + 1.0 / k)) - 1.0


def _solve_weibull_shape(cv):
    """Bisect Gamma(1+2/k)/Gamma(1+1/k)^2 - 1 = cv^2 for the shape k."""
    target = cv * cv
    lo, hi = _WEIBULL_K_LO, _WEIBULL_K_HI
    # cv^2 is strictly decreasing in k
    if _weibull_cv_sq(lo) < target or _weibull_cv_sq(hi) > target:
        raise ValueError(
            f"no Weibull shape in [{_WEIBULL_K_LO}, {_WEIBULL_K_HI}] matches cv={cv:g}"
        )
    while hi - lo > 1e-12 * hi:
        m = 0.5 * (lo + hi)
        if _weibull_cv_sq(m) > target:
            lo = m
        else:
            hi = m
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Marginal:
    """A one-dimensional marginal distribution.

    Instances store native parameters after construction; the
    constructor moments are kept for reporting only.  Marginals are
    immutable and safe for concurrent reads.

    Native parameterization by kind:

    - normal:    (mean, std)
    - lognormal: (mu_log, sigma_log) of the underlying normal
    - uniform:   (lower, upper)
    - weibull:   (shape, scale)
    - gumbel:    (location, scale)
    """

    kind: str
    params: tuple[float, float]
    a: float  # constructor mean (or lower limit for uniform)
    b: float  # constructor std (or upper limit for uniform)

    @classmethod
    def from_moments(cls, kind: str, a: float, b: float) -> "Marginal":
        """Build a marginal from (mean, std), or (lower, upper) for uniform.

        Moment matching is closed form except for the Weibull shape,
        which is found by bisection.
        """
        if kind not in KINDS:
            raise ValueError(f"unknown distribution kind {kind!r}")
        a = float(a)
        b = float(b)
        if kind == "uniform":
            if not b > a:
                raise ValueError("uniform requires upper > lower")
            return cls("uniform", (a, b), a, b)
        if not b > 0.0:
            raise ValueError("standard deviation must be positive")
        if kind == "normal":
            params = (a, b)
        elif kind == "lognormal":
            if a <= 0.0:
                raise ValueError("lognormal requires a positive mean")
            sigma_sq = math.log(1.0 + (b / a) ** 2)
            params = (math.log(a) - 0.5 * sigma_sq, math.sqrt(sigma_sq))
        elif kind == "gumbel":
            scale = b * math.sqrt(6.0) / math.pi
            params = (a - _EULER_GAMMA * scale, scale)
        else:  # weibull
            if a <= 0.0:
                raise ValueError("weibull requires a positive mean")
            k = _solve_weibull_shape(b / a)
            scale = a / math.exp(gammaln(1.0 + 1.0 / k))
            params = (k, scale)
        return cls(kind, params, a, b)

    # -- support ------------------------------------------------------

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "uniform":
            return self.params
        if self.kind in ("lognormal", "weibull"):
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    # -- densities and probabilities ----------------------------------

    def pdf(self, x):
        """Probability density at x (zero outside the support)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        v = np.atleast_1d(x)
        out = np.zeros_like(v)
        if self.kind == "normal":
            mu, sd = self.params
            z = (v - mu) / sd
            out = np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))
        elif self.kind == "lognormal":
            mu, sd = self.params
            pos = v > 0.0
            z = (np.log(v[pos]) - mu) / sd
            out[pos] = np.exp(-0.5 * z * z) / (v[pos] * sd * math.sqrt(2.0 * math.pi))
        elif self.kind == "uniform":
            lo, hi = self.params
            out = np.where((v >= lo) & (v <= hi), 1.0 / (hi - lo), 0.0)
        elif self.kind == "weibull":
            k, lam = self.params
            pos = v > 0.0
            r = v[pos] / lam
            out[pos] = (k / lam) * r ** (k - 1.0) * np.exp(-(r ** k))
        else:  # gumbel
            loc, scale = self.params
            z = (v - loc) / scale
            out = np.exp(-z - np.exp(-z)) / scale
        return float(out[0]) if scalar else out.reshape(x.shape)

    def cdf(self, x):
        """Cumulative probability at x, clamped to [0, 1]."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        v = np.atleast_1d(x)
        out = np.zeros_like(v)
        if self.kind == "normal":
            mu, sd = self.params
            out = ndtr((v - mu) / sd)
        elif self.kind == "lognormal":
            mu, sd = self.params
            pos = v > 0.0
            out[pos] = ndtr((np.log(v[pos]) - mu) / sd)
        elif self.kind == "uniform":
            lo, hi = self.params
            out = np.clip((v - lo) / (hi - lo), 0.0, 1.0)
        elif self.kind == "weibull":
            k, lam = self.params
            pos = v > 0.0
            out[pos] = -np.expm1(-((v[pos] / lam) ** k))
        else:  # gumbel
            loc, scale = self.params
            out = np.exp(-np.exp(-(v - loc) / scale))
        return float(out[0]) if scalar else out.reshape(x.shape)

    def ppf(self, u):
        """Quantile function; u must lie strictly inside (0, 1).

        Closed form for every family; the normal quantile uses
        :func:`norm_ppf` and the lognormal exponentiates it.
        """
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise ValueError("probabilities must lie strictly inside (0, 1)")
        if self.kind == "normal":
            mu, sd = self.params
            return mu + sd * norm_ppf(u)
        if self.kind == "lognormal":
            mu, sd = self.params
            return np.exp(mu + sd * norm_ppf(u))
        if self.kind == "uniform":
            lo, hi = self.params
            return lo + u * (hi - lo)
        if self.kind == "weibull":
            k, lam = self.params
            return lam * (-np.log1p(-u)) ** (1.0 / k)
        # gumbel
        loc, scale = self.params
        return loc - scale * np.log(-np.log(u))

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "lower": self.a, "upper": self.b}
        return {"kind": self.kind, "mean": self.a, "std": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "Marginal":
        kind = d["kind"]
        if kind == "uniform":
            return cls.from_moments("uniform", d["lower"], d["upper"])
        return cls.from_moments(kind, d["mean"], d["std"])
