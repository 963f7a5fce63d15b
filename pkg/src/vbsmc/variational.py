"""
Variational quantities for the gamma-noise latent-state model.

* :func:`log_q_unnormalized` evaluates the closed-form variational
  log-posterior over a latent trajectory, up to an additive constant.
* :func:`kl_gamma` is the analytic KL divergence between two gamma laws.
* :func:`fitness_estimate` is a plain Monte Carlo estimate of the fitness
  (evidence lower bound) with its standard error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import digamma, gammaln

from .arma import state_covariance
from .exceptions import DataError, NumericalError

__all__ = [
    "VariationalPosterior",
    "FitnessEstimate",
    "gaussian_logpdf",
    "log_q_unnormalized",
    "kl_gamma",
    "fitness_estimate",
]

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class VariationalPosterior:
    """Ingredients of ``q(x_{1:t} | z_{1:t})``.

    Attributes
    ----------
    state_covariance : numpy.ndarray, shape (t, t)
        Prior covariance of the latent trajectory.
    noise_mean_per_step : numpy.ndarray, shape (t,)
        ``E[v_l]`` under the variational noise law, one entry per step.
    residual_sign : float
        Sign applied to the residual term ``sum (z_l - x_l)^2 E[v_l]``. The
        default ``+1`` keeps the closed form exactly as derived; ``-1`` turns
        the term into a Gaussian-like penalty.
    """

    state_covariance: np.ndarray
    noise_mean_per_step: np.ndarray
    residual_sign: float = 1.0

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.state_covariance, dtype=float))
        means = np.atleast_1d(np.asarray(self.noise_mean_per_step, dtype=float))
        if cov.shape != (means.size, means.size):
            raise DataError(f"covariance shape {cov.shape} does not match horizon {means.size}")
        if np.any(means < 0):
            raise DataError("noise means must be non-negative")
        if self.residual_sign not in (1.0, -1.0):
            raise DataError("residual_sign must be +1 or -1")
        object.__setattr__(self, "state_covariance", cov)
        object.__setattr__(self, "noise_mean_per_step", means)
        object.__setattr__(self, "residual_sign", float(self.residual_sign))

    @property
    def horizon(self):
        return self.noise_mean_per_step.size

    @classmethod
    def from_model(cls, model, t, noise, residual_sign=1.0):
        """Build from an ARMA model and an IID gamma noise law."""
        return cls(state_covariance(model, t), np.full(t, noise.mean()), residual_sign)


@dataclass(frozen=True)
class FitnessEstimate:
    value: float
    stderr: float
    kl: float
    samples: int

    def to_dict(self):
        return {"value": self.value, "stderr": self.stderr, "kl": self.kl, "samples": self.samples}


def gaussian_logpdf(x, cov):
    """Zero-mean multivariate normal log density; ``x`` may be batched on leading axes."""
    x = np.asarray(x, dtype=float)
    factor = cho_factor(cov, lower=True)
    d = cov.shape[0]
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    flat = x.reshape(-1, d)
    maha = np.einsum("ij,ij->i", flat, cho_solve(factor, flat.T).T)
    out = -0.5 * (d * _LOG_2PI + logdet + maha)
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])


def log_q_unnormalized(x, z, vp):
    """``log N(x; 0, C) + sign * sum_l (z_l - x_l)^2 E[v_l]`` with the constant dropped."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape[-1] != vp.horizon or z.shape[-1] != vp.horizon:
        raise DataError(
            f"x and z must have length {vp.horizon}, got {x.shape[-1]} and {z.shape[-1]}"
        )
    residual = np.sum((z - x) ** 2 * vp.noise_mean_per_step, axis=-1)
    return gaussian_logpdf(x, vp.state_covariance) + vp.residual_sign * residual


def kl_gamma(q_params, p_params):
    """``KL[Gamma(q) || Gamma(p)]`` for shape-scale gamma laws."""
    kq, sq = q_params.beta, q_params.alpha
    kp, sp = p_params.beta, p_params.alpha
    if kq == kp and sq == sp:
        return 0.0
    kl = (
        (kq - kp) * digamma(kq)
        - gammaln(kq)
        + gammaln(kp)
        + kp * (np.log(sp) - np.log(sq))
        + kq * (sq - sp) / sp
    )
    return max(float(kl), 0.0)


def fitness_estimate(q, channel, z, mc_samples, rng, q_noise=None, q_covariance=None):
    """Monte Carlo estimate of the variational fitness.

    Latent trajectories are drawn from the Gaussian factor
    ``N(0, q_covariance)`` (default: the prior covariance held by ``q``).
    Each draw contributes ``log p(z | x) + log N(x; C_x) - log N(x; q_cov)``
    where ``p(z | x)`` integrates the noise under the channel's own gamma
    law. ``KL[q_noise || channel.noise]`` is then subtracted. By Jensen's
    inequality the expectation never exceeds ``log p(z)``.

    Parameters
    ----------
    q : VariationalPosterior
    channel : ObservationChannel
    z : array_like, shape (t,)
    mc_samples : int
    rng : numpy.random.Generator
    q_noise : GammaNoiseParams, optional
        Variational noise law; defaults to the channel's noise (zero KL).
    q_covariance : array_like, optional

    Returns
    -------
    FitnessEstimate
    """
    mc_samples = int(mc_samples)
    if mc_samples < 1:
        raise DataError("mc_samples must be >= 1")
    z = np.asarray(z, dtype=float)
    if z.shape != (q.horizon,):
        raise DataError(f"z must have shape ({q.horizon},), got {z.shape}")
    prior_cov = q.state_covariance
    q_cov = prior_cov if q_covariance is None else np.asarray(q_covariance, dtype=float)
    q_noise = channel.noise if q_noise is None else q_noise

    lower = np.linalg.cholesky(q_cov)
    x = rng.standard_normal((mc_samples, q.horizon)) @ lower.T
    terms = np.sum(channel.log_likelihood(z, x), axis=-1)
    if q_covariance is not None:
        terms = terms + gaussian_logpdf(x, prior_cov) - gaussian_logpdf(x, q_cov)
    bad = ~np.isfinite(terms)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"non-finite fitness term at Monte Carlo sample {first}: {terms[first]!r}")

    kl = kl_gamma(q_noise, channel.noise)
    mean = float(np.sum(terms) / mc_samples)
    stderr = float(np.std(terms, ddof=1) / np.sqrt(mc_samples)) if mc_samples > 1 else float("nan")
    return FitnessEstimate(value=mean - kl, stderr=stderr, kl=kl, samples=mc_samples)
