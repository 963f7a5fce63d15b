"""
Sequential importance sampling-resampling (SISR) particle filter.

Particles are whole trajectories: each carries its state history and the
innovation history that produced it, because fGn innovations are correlated
and the next innovation is drawn conditionally on all previous ones. The
prior transition is the proposal, so the incremental weight of a particle is
just its observation likelihood.

Array layout: ``states`` and ``innovations`` have shape ``(N, t)`` for a
scalar latent process and ``(N, t, d)`` for a ``d``-dimensional one.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConfigError, DataError, WeightUnderflowError
from .fgn import FgnPredictor
from .obs import ObservationChannel

__all__ = [
    "ResamplingScheme",
    "Particle",
    "ParticleCloud",
    "FilterConfig",
    "FilterReport",
    "ParticleStreams",
    "init_cloud",
    "propagate",
    "reweight",
    "reweight_loglik",
    "resample_paper",
    "resample_systematic",
    "resample",
    "estimate",
    "ess",
    "rmse_trace",
    "run_filter",
]

BLOCK_SIZE = 256


class ResamplingScheme(str, enum.Enum):
    PAPER = "paper"
    SYSTEMATIC = "systematic"


class Particle(NamedTuple):
    state_history: np.ndarray
    innovation_history: np.ndarray
    weight: float


@dataclass(frozen=True, eq=False)
class ParticleCloud:
    states: np.ndarray
    innovations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.states.shape != self.innovations.shape:
            raise ValueError("state and innovation histories must share their shape")
        if self.weights.shape != (self.states.shape[0],):
            raise ValueError("one weight per particle is required")
        if self.states.shape[0] < 2:
            raise ConfigError("a particle cloud needs at least 2 particles")

    @property
    def n_particles(self):
        return self.states.shape[0]

    @property
    def step(self):
        return self.states.shape[1]

    @property
    def current(self):
        """States at the current step, shape ``(N,)`` or ``(N, d)``."""
        return self.states[:, -1]

    def __len__(self):
        return self.n_particles

    def __getitem__(self, i):
        return Particle(self.states[i], self.innovations[i], float(self.weights[i]))

    def with_weights(self, weights):
        return ParticleCloud(self.states, self.innovations, weights)


@dataclass
class FilterConfig:
    """Settings of one filter run.

    ``ess_threshold`` is a fraction of ``n_particles``: when set, resampling
    only happens at steps whose ESS falls below ``ess_threshold * N``.
    ``None`` resamples at every step. ``workers`` sets the number of threads
    that draw particle noise; output does not depend on it.
    """

    model: Any
    channel: ObservationChannel = field(default_factory=ObservationChannel)
    n_particles: int = 1000
    resampling: ResamplingScheme = ResamplingScheme.PAPER
    seed: int = 0
    ess_threshold: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.n_particles, bool) or int(self.n_particles) != self.n_particles:
            raise ConfigError(f"n_particles must be an integer, got {self.n_particles!r}")
        self.n_particles = int(self.n_particles)
        if self.n_particles < 2:
            raise ConfigError(f"n_particles must be >= 2, got {self.n_particles}")
        try:
            self.resampling = ResamplingScheme(self.resampling)
        except ValueError:
            raise ConfigError(
                f"resampling must be one of {[s.value for s in ResamplingScheme]}, got {self.resampling!r}"
            ) from None
        if self.ess_threshold is not None and not 0.0 < float(self.ess_threshold) <= 1.0:
            raise ConfigError("ess_threshold must be a fraction in (0, 1]")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        if int(self.seed) < 0:
            raise ConfigError("seed must be a non-negative integer")
        self.seed = int(self.seed)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "channel": self.channel.to_dict(),
            "n_particles": self.n_particles,
            "resampling": self.resampling.value,
            "seed": self.seed,
            "ess_threshold": self.ess_threshold,
        }


@dataclass
class FilterReport:
    """Per-step output of :func:`run_filter`.

    ``estimates`` and ``truth`` have shape ``(T,)`` (or ``(T, d)`` for
    vector states); ``rmse_trace`` is ``None`` when no truth was supplied.
    ``weight_error`` holds ``|sum(w) - 1|`` per step, the larger of the
    values after reweighting and after resampling.
    """

    estimates: np.ndarray
    ess_trace: np.ndarray
    resample_counts: np.ndarray
    truth: Optional[np.ndarray] = None
    rmse_trace: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    weight_error: Optional[np.ndarray] = None

    @property
    def horizon(self):
        return self.estimates.shape[0]

    @property
    def final_rmse(self):
        return None if self.rmse_trace is None else float(self.rmse_trace[-1])


class ParticleStreams:
    """Seed-derived noise streams, one per fixed block of particle slots.

    Particle slot ``i`` always draws from the generator of block
    ``i // block_size``, so the numbers a particle sees do not depend on how
    many threads produce them.
    """

    def __init__(self, seed_sequence, n_particles, workers=1, block_size=BLOCK_SIZE):
        self.n_particles = int(n_particles)
        self.bounds = [(s, min(s + block_size, self.n_particles)) for s in range(0, self.n_particles, block_size)]
        self.generators = [np.random.default_rng(ss) for ss in seed_sequence.spawn(len(self.bounds))]
        self.workers = int(workers)

    def standard_normal(self, shape):
        shape = tuple(np.atleast_1d(shape))
        if shape[0] != self.n_particles:
            raise ValueError(f"leading dimension must be {self.n_particles}, got {shape[0]}")
        out = np.empty(shape)

        def fill(block):
            (lo, hi), gen = block
            out[lo:hi] = gen.standard_normal((hi - lo,) + shape[1:])

        blocks = list(zip(self.bounds, self.generators))
        if self.workers > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                list(pool.map(fill, blocks))
        else:
            for b in blocks:
                fill(b)
        return out


def _streams(seed, n_particles, workers=1):
    noise_ss, resample_ss = np.random.SeedSequence(seed).spawn(2)
    return ParticleStreams(noise_ss, n_particles, workers), np.random.default_rng(resample_ss)


def _state_dim(model):
    return getattr(model, "dim", None)


def init_cloud(config, rng=None, predictor=None):
    """Draw ``x_1`` for every particle from the prior, with uniform weights."""
    n = config.n_particles
    dim = _state_dim(config.model)
    tail = () if dim is None else (dim,)
    empty = ParticleCloud(np.empty((n, 0) + tail), np.empty((n, 0) + tail), np.full(n, 1.0 / n))
    if rng is None:
        rng, _ = _streams(config.seed, n, config.workers)
    return propagate(empty, config.model, rng, predictor)


def propagate(cloud, model, rng, predictor=None):
    """Advance every particle one step through the prior transition.

    The new innovation of each particle is drawn from the fGn conditional law
    given that particle's own innovation history; weights are untouched.
    """
    spec = model.innovations
    if predictor is None:
        predictor = FgnPredictor(spec.hurst)
    t = cloud.step
    shape = (cloud.n_particles,) + cloud.states.shape[2:]
    if t:
        mean = np.einsum("k,nk...->n...", predictor.coefficients(t), cloud.innovations)
    else:
        mean = np.zeros(shape)
    scale = np.sqrt(spec.sigma2 * predictor.variance(t))
    u_next = mean + scale * rng.standard_normal(shape)
    innovations = np.concatenate([cloud.innovations, u_next[:, None]], axis=1)
    x_next = model.next_state(cloud.states, innovations)
    states = np.concatenate([cloud.states, x_next[:, None]], axis=1)
    return ParticleCloud(states, innovations, cloud.weights)


def reweight_loglik(cloud, loglik, step=None):
    """Multiply weights by ``exp(loglik)`` and renormalize in the log domain."""
    loglik = np.asarray(loglik, dtype=float)
    with np.errstate(divide="ignore"):
        log_w = np.log(cloud.weights) + loglik
    if np.any(np.isnan(log_w)) or not np.any(np.isfinite(log_w)) or np.any(log_w == np.inf):
        raise WeightUnderflowError(cloud.step if step is None else step)
    w = np.exp(log_w - logsumexp(log_w))
    w /= w.sum()
    return cloud.with_weights(w)


def reweight(cloud, z, channel, observed=None, step=None):
    """Weight particles by the likelihood of observation ``z``.

    For vector states ``observed`` masks the components of ``z`` that are
    present; missing components contribute no likelihood factor and a fully
    missing step leaves the weights untouched.
    """
    x = cloud.current
    if x.ndim == 1:
        if observed is not None and not bool(np.all(observed)):
            return cloud
        loglik = channel.log_likelihood(z, x)
    else:
        z = np.asarray(z, dtype=float)
        observed = np.ones(z.shape, bool) if observed is None else np.asarray(observed, bool)
        if not observed.any():
            return cloud
        loglik = np.sum(channel.log_likelihood(z[observed], x[:, observed]), axis=-1)
    return reweight_loglik(cloud, loglik, step)


def _draw_by_weight(weights, u):
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, u * cum[-1], side="right")
    return np.minimum(idx, weights.size - 1)


def _select(cloud, idx, weights):
    return ParticleCloud(cloud.states[idx], cloud.innovations[idx], weights)


def resample_paper(cloud, rng):
    """Replace each particle with probability ``1 - w_i``.

    A replaced slot receives a trajectory drawn from the current cloud by
    weight-proportional selection and the arithmetic mean weight of the other
    ``N - 1`` particles; all weights are then renormalized.

    Returns
    -------
    cloud : ParticleCloud
    n_replaced : int
    """
    w = cloud.weights
    n = w.size
    replace = rng.random(n) < 1.0 - w
    k = int(replace.sum())
    if k == 0:
        return cloud, 0
    idx = np.arange(n)
    idx[replace] = _draw_by_weight(w, rng.random(k))
    new_w = w.copy()
    new_w[replace] = (w.sum() - w[replace]) / (n - 1)
    new_w /= new_w.sum()
    return _select(cloud, idx, new_w), k


def systematic_indices(weights, u):
    """Systematic resampling ancestor indices for a single uniform ``u``."""
    n = weights.size
    return _draw_by_weight(weights, (u + np.arange(n)) / n)


def resample_systematic(cloud, rng):
    """Systematic resampling; every weight is reset to ``1/N``.

    Returns the new cloud and the number of slots whose ancestor changed.
    """
    n = cloud.n_particles
    idx = systematic_indices(cloud.weights, rng.random())
    return _select(cloud, idx, np.full(n, 1.0 / n)), int(np.count_nonzero(idx != np.arange(n)))


def resample(cloud, scheme, rng):
    if ResamplingScheme(scheme) is ResamplingScheme.PAPER:
        return resample_paper(cloud, rng)
    return resample_systematic(cloud, rng)


def estimate(cloud):
    """Posterior-mean estimate ``sum_i w_i x_t^(i)``."""
    est = cloud.weights @ cloud.current
    return float(est) if np.ndim(est) == 0 else est


def ess(cloud):
    return float(1.0 / np.sum(cloud.weights**2))


def rmse_trace(truth, estimates):
    """Running RMSE ``sqrt(mean_{i<=t} (x_i - xhat_i)^2)`` along the first axis."""
    err2 = (np.asarray(truth, dtype=float) - np.asarray(estimates, dtype=float)) ** 2
    steps = np.arange(1, err2.shape[0] + 1).reshape((-1,) + (1,) * (err2.ndim - 1))
    return np.sqrt(np.cumsum(err2, axis=0) / steps)


def _check_observations(z, observed):
    z = np.asarray(z, dtype=float)
    if z.ndim == 0 or z.shape[0] < 1:
        raise DataError("at least one observation is required")
    if observed is None:
        observed = np.ones(z.shape, bool)
    else:
        observed = np.asarray(observed, bool)
        if observed.shape != z.shape:
            raise DataError("observation mask must match the observations' shape")
    vals = np.where(observed, z, 0.0)
    bad = observed & ~(vals >= 0)
    if np.any(bad):
        loc = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DataError(f"observation at index {loc} is negative or not a number: {z[loc]!r}")
    return z, observed


def run_filter(config, observations, truth=None, observed=None):
    """Run the SISR filter over a sequence of observations.

    Parameters
    ----------
    config : FilterConfig
    observations : array_like, shape (T,) or (T, d)
    truth : array_like, optional
        True latent states; when given the report carries a running RMSE.
    observed : array_like of bool, optional
        Mask of present observations (same shape as ``observations``).

    Returns
    -------
    FilterReport
    """
    z, observed = _check_observations(observations, observed)
    n_steps = z.shape[0]
    model, channel = config.model, config.channel
    streams, resample_rng = _streams(config.seed, config.n_particles, config.workers)
    predictor = FgnPredictor(model.innovations.hurst)
    threshold = None if config.ess_threshold is None else config.ess_threshold * config.n_particles

    estimates = np.empty(z.shape)
    ess_trace = np.empty(n_steps)
    counts = np.zeros(n_steps, dtype=int)
    weight_error = np.empty(n_steps)
    cloud = init_cloud(config, streams, predictor)
    for t in range(n_steps):
        if t:
            cloud = propagate(cloud, model, streams, predictor)
        cloud = reweight(cloud, z[t], channel, observed[t], step=t + 1)
        estimates[t] = estimate(cloud)
        ess_trace[t] = ess(cloud)
        weight_error[t] = abs(cloud.weights.sum() - 1.0)
        if threshold is None or ess_trace[t] < threshold:
            cloud, counts[t] = resample(cloud, config.resampling, resample_rng)
            weight_error[t] = max(weight_error[t], abs(cloud.weights.sum() - 1.0))

    report = FilterReport(estimates, ess_trace, counts, config=config.to_dict(), weight_error=weight_error)
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != estimates.shape:
            raise DataError(f"truth shape {truth.shape} does not match observations {estimates.shape}")
        report.truth = truth
        report.rmse_trace = rmse_trace(truth, estimates)
    return report
