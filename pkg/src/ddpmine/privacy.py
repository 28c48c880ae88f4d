"""Two-sided geometric noise and its per-owner Pólya decomposition."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class NoiseParams:
    """Privacy budget ``epsilon`` split over ``K`` candidates, ``P`` responders each."""

    epsilon: float
    K: int
    P: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError("K must be a positive integer")
        if int(self.P) != self.P or self.P < 1:
            raise ValueError("P must be a positive integer")

    @property
    def alpha(self) -> float:
        return math.exp(-self.epsilon / self.K)

    def owner_share(self) -> "PolyaParams":
        """Pólya parameters of one owner's X (or Y) draw."""
        return PolyaParams(1.0 / self.P, self.alpha)


@dataclass(frozen=True)
class PolyaParams:
    r: float
    p: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("Polya shape r must be > 0")
        if not 0 < self.p < 1:
            raise ValueError("Polya p must lie in (0, 1)")

    @property
    def mean(self) -> float:
        return self.r * self.p / (1 - self.p)

    @property
    def variance(self) -> float:
        return self.r * self.p / (1 - self.p) ** 2


def sample_polya(params: PolyaParams, rng: np.random.Generator, size=None):
    """Poisson-Gamma mixture: gamma with shape r and *scale* p/(1-p), then Poisson."""
    lam = rng.gamma(params.r, params.p / (1 - params.p), size=size)
    return rng.poisson(lam)


def polya_pmf(params: PolyaParams, x):
    """Gamma(r+x)/(Gamma(r) x!) p^x (1-p)^r, evaluated in log space. Vectorized in ``x``."""
    x = np.asarray(x)
    if np.any(x < 0):
        raise ValueError("polya_pmf is defined for x >= 0")
    r, p = params.r, params.p
    logp = gammaln(r + x) - gammaln(r) - gammaln(x + 1.0) + x * math.log(p) + r * math.log1p(-p)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out


def geometric_pmf(alpha: float, x):
    """((1-alpha)/(1+alpha)) alpha^|x| over the integers."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = (1 - alpha) / (1 + alpha) * np.exp(x * math.log(alpha))
    return float(out) if out.ndim == 0 else out


def geometric_variance(alpha: float) -> float:
    return 2 * alpha / (1 - alpha) ** 2


def sample_owner_noise(params: NoiseParams, rng: np.random.Generator, size=None):
    """One owner's noise share X - Y, X and Y i.i.d. Pólya(1/P, alpha).

    Summed over P owners this is two-sided geometric with parameter alpha.
    """
    share = params.owner_share()
    x = sample_polya(share, rng, size)
    y = sample_polya(share, rng, size)
    return x - y
