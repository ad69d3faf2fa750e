"""Quantile return distributions and risk distortions.

A return distribution is represented by n quantile values located at the
midpoint fractions tau_i = (2i+1)/(2n).  Risk preferences enter through a
distortion of those fractions: conditional value at risk (CVaR) at level
alpha reads the distribution through beta(tau; alpha) = tau * alpha, so
alpha = 1 recovers the plain expectation and smaller alpha weights the lower
tail.  ``RiskMapping`` turns a normalized state-novelty signal into an alpha
for agents that adapt their risk level online.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import distorted_expectation_rows

NEUTRAL = "neutral"
STATIC_CVAR = "static-cvar"
ADAPTIVE = "adaptive"
RISK_KINDS = (NEUTRAL, STATIC_CVAR, ADAPTIVE)

EXPONENTIAL = "exponential"
LINEAR = "linear"
LOGARITHMIC = "logarithmic"
MAPPING_KINDS = (EXPONENTIAL, LINEAR, LOGARITHMIC)

_index_cache: dict[tuple[int, float], np.ndarray] = {}


def midpoint_fractions(n: int) -> np.ndarray:
    """The n quantile fractions (2i+1)/(2n), i = 0..n-1."""
    if n < 1:
        raise ValueError("need at least one quantile")
    return (2.0 * np.arange(n) + 1.0) / (2.0 * n)


class QuantileDistribution:
    """A distribution given by n quantile values at midpoint fractions.

    Values may arrive in any order (e.g. straight out of a network head);
    all order-dependent reads go through an internally cached sorted copy.
    """

    __slots__ = ("values", "_sorted")

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("quantile values must be a non-empty 1-d array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("quantile values must be finite")
        self.values = arr
        self._sorted = None

    @property
    def n_quantiles(self) -> int:
        return self.values.size

    @property
    def sorted_values(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.values)
        return self._sorted

    @property
    def fractions(self) -> np.ndarray:
        return midpoint_fractions(self.values.size)

    def __repr__(self) -> str:
        return f"QuantileDistribution(n={self.values.size}, mean={self.values.mean():.4g})"


def expectation(dist: QuantileDistribution) -> float:
    """Undistorted expected value: the mean of the quantile values."""
    return float(dist.values.mean())


def cvar_distort(tau, alpha):
    """CVaR distortion of quantile fractions: beta(tau; alpha) = tau * alpha."""
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0.0) or np.any(tau > 1.0):
        raise ValueError("tau must lie in [0, 1]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    out = tau * alpha
    return float(out) if out.ndim == 0 else out


# Bin boundaries belong to the upper bin: floor(k) = k for exact phi*n = k.
# Floating point can land an exact boundary a few ulp below the integer
# (0.4 * 17.5 = 6.999...), so indices snap up across a 1e-9 one-sided gap.
# Safe: non-boundary products of any alpha with <= 6 decimal digits sit at
# least 2.5e-7 away from an integer.
_BOUNDARY_SNAP = 1e-9


def inverse_cdf(dist: QuantileDistribution, phi: float) -> float:
    """Step-function inverse CDF of the quantile values at fraction phi.

    With sorted values v_0 <= ... <= v_{n-1}, returns
    v[min(floor(phi * n), n - 1)].  Right-continuous at the jump points, so
    e.g. two values and phi = 0.5 select the upper one.
    """
    if not 0.0 <= phi <= 1.0:
        raise ValueError("phi must lie in [0, 1]")
    n = dist.n_quantiles
    idx = min(int(math.floor(phi * n + _BOUNDARY_SNAP)), n - 1)
    return float(dist.sorted_values[idx])


def _distortion_indices(n: int, alpha: float) -> np.ndarray:
    key = (n, alpha)
    idx = _index_cache.get(key)
    if idx is None:
        phis = midpoint_fractions(n) * alpha
        idx = np.minimum(np.floor(phis * n + _BOUNDARY_SNAP).astype(np.int64), n - 1)
        _index_cache[key] = idx
    return idx


def distorted_expectation(dist: QuantileDistribution, alpha: float) -> float:
    """Risk-distorted expectation: mean of inverse_cdf at distorted fractions.

    Averages inverse_cdf(dist, tau_i * alpha) over the midpoint fractions.
    alpha = 1 returns exactly ``expectation``; alpha = 0 returns exactly the
    minimum value; in between, the value is non-decreasing in alpha and never
    leaves [min, expectation].
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 1.0:
        return expectation(dist)
    if alpha == 0.0:
        return float(dist.sorted_values[0])
    idx = _distortion_indices(dist.n_quantiles, alpha)
    return float(dist.sorted_values.take(idx).mean())


def distorted_expectations(values: np.ndarray, alphas) -> np.ndarray:
    """Batched ``distorted_expectation`` over rows of quantile values.

    values: (rows, n); alphas: scalar or (rows,).  Matches the scalar path
    row by row (sorting internally; exact mean / min at alpha = 1 / 0).
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("values must be 2-d (rows, n_quantiles)")
    alphas = np.broadcast_to(np.asarray(alphas, dtype=np.float64), (values.shape[0],))
    if np.any(alphas < 0.0) or np.any(alphas > 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    return distorted_expectation_rows(values, np.ascontiguousarray(alphas))


@dataclass(frozen=True)
class RiskMapping:
    """Maps a normalized novelty signal u >= 0 to a risk level alpha.

    kind selects the shape: ``exponential`` exp(-u), ``linear`` 1 - u,
    ``logarithmic`` 1 - u^2.  The output is always clamped to
    [alpha_min, 1], so downstream distortions stay well-defined and the
    agent never becomes fully risk-blind to the lower tail.
    """

    kind: str = EXPONENTIAL
    alpha_min: float = 0.01

    def __post_init__(self):
        if self.kind not in MAPPING_KINDS:
            raise ValueError(f"unknown mapping kind {self.kind!r}")
        if not 0.0 < self.alpha_min <= 1.0:
            raise ValueError("alpha_min must lie in (0, 1]")

    def risk_level(self, u: float) -> float:
        if self.kind == EXPONENTIAL:
            alpha = math.exp(-u)
        elif self.kind == LINEAR:
            alpha = 1.0 - u
        else:
            alpha = 1.0 - u * u
        return min(1.0, max(self.alpha_min, alpha))

    def risk_levels(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if self.kind == EXPONENTIAL:
            alpha = np.exp(-u)
        elif self.kind == LINEAR:
            alpha = 1.0 - u
        else:
            alpha = 1.0 - u * u
        return np.clip(alpha, self.alpha_min, 1.0)


@dataclass(frozen=True)
class RiskPolicy:
    """How an agent scores a return distribution when ranking actions.

    ``neutral`` uses the plain expectation; ``static-cvar`` uses a fixed
    distortion level ``alpha``; ``adaptive`` distorts by a per-state alpha
    supplied at call time (produced by a ``RiskMapping`` over a novelty
    signal).
    """

    kind: str = NEUTRAL
    alpha: float = 1.0
    mapping: RiskMapping | None = None

    def __post_init__(self):
        if self.kind not in RISK_KINDS:
            raise ValueError(f"unknown risk policy kind {self.kind!r}")
        if self.kind == STATIC_CVAR and not 0.0 <= self.alpha <= 1.0:
            raise ValueError("static CVaR level must lie in [0, 1]")
        if self.kind == ADAPTIVE and self.mapping is None:
            raise ValueError("adaptive risk policy needs a RiskMapping")


def apply_risk(dist: QuantileDistribution, policy: RiskPolicy,
               risk_alpha: float | None = None) -> float:
    """Score a distribution under a risk policy.

    For the adaptive kind the caller must pass the current per-state
    ``risk_alpha``; for the other kinds it is ignored.
    """
    if policy.kind == NEUTRAL:
        return expectation(dist)
    if policy.kind == STATIC_CVAR:
        return distorted_expectation(dist, policy.alpha)
    if risk_alpha is None:
        raise ValueError("adaptive risk policy needs risk_alpha")
    return distorted_expectation(dist, risk_alpha)
