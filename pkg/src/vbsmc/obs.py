"""
Gamma observation noise and the log-volatility observation channel.

Noise follows the shape-scale gamma law with density
``v^(beta-1) exp(-v/alpha) / (alpha^beta Gamma(beta))``, and the channel
observes a latent state ``x`` as ``z = v * exp(x / 2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from .exceptions import ConfigError, DataError

__all__ = [
    "GammaNoiseParams",
    "ChannelKind",
    "ObservationChannel",
    "sample_noise",
    "observe",
    "log_likelihood",
    "noise_mean",
]


@dataclass(frozen=True)
class GammaNoiseParams:
    """Gamma law with scale ``alpha`` and shape ``beta``."""

    alpha: float = 0.5
    beta: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"gamma {name} must be finite and > 0, got {value!r}")
            object.__setattr__(self, name, value)

    def mean(self):
        return self.alpha * self.beta

    def variance(self):
        return self.alpha**2 * self.beta


def noise_mean(params):
    return params.mean()


def sample_noise(params, count, rng):
    """IID gamma draws, shape ``(count,)`` or any shape tuple."""
    return rng.gamma(shape=params.beta, scale=params.alpha, size=count)


def observe(x, params, rng):
    """Observe latent state(s) ``x`` through ``z = v exp(x/2)``."""
    x = np.asarray(x, dtype=float)
    v = rng.gamma(shape=params.beta, scale=params.alpha, size=x.shape)
    z = v * np.exp(0.5 * x)
    return float(z) if z.ndim == 0 else z


def log_likelihood(z, x, params):
    """Exact log density ``log p(z | x)`` of the log-volatility channel.

    Change of variables ``v = z exp(-x/2)`` gives
    ``log Gamma(v; beta, alpha) - x/2``. At ``z = 0`` the density is the
    analytic limit: ``-inf`` for ``beta > 1`` and ``-log(alpha) - x/2`` for
    ``beta == 1``. With ``beta < 1`` the density diverges at zero and such an
    observation is rejected. Broadcasts over ``z`` and ``x``.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DataError("observations must be non-negative")
    if params.beta < 1 and np.any(z == 0):
        raise DataError("z = 0 has infinite density when beta < 1")
    half_x = 0.5 * x
    v = z * np.exp(-half_x)
    out = (
        xlogy(params.beta - 1.0, v)
        - v / params.alpha
        - params.beta * np.log(params.alpha)
        - gammaln(params.beta)
        - half_x
    )
    return float(out) if out.ndim == 0 else out


class ChannelKind(str, enum.Enum):
    LOG_VOLATILITY = "log_volatility"


@dataclass(frozen=True)
class ObservationChannel:
    """Non-linear observation channel ``z = g(x, v)``.

    The particle filter only uses :meth:`sample` and :meth:`log_likelihood`;
    new channel kinds plug in by providing both.
    """

    kind: ChannelKind = ChannelKind.LOG_VOLATILITY
    noise: GammaNoiseParams = field(default_factory=GammaNoiseParams)

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", ChannelKind(self.kind))
        except ValueError:
            raise ConfigError(f"unknown observation channel {self.kind!r}") from None

    def sample(self, x, rng):
        return observe(x, self.noise, rng)

    def log_likelihood(self, z, x):
        return log_likelihood(z, x, self.noise)

    def to_dict(self):
        return {"kind": self.kind.value, "alpha": self.noise.alpha, "beta": self.noise.beta}
