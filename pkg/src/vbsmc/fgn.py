"""
Fractional Gaussian noise innovations.

Exact second-order statistics of unit-step fractional Gaussian noise (fGn),
dense Cholesky sampling of finite stretches, and the one-step Gaussian
predictor used to extend a particle's innovation history.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, toeplitz

from .exceptions import ConfigError, DataError, FactorizationError

__all__ = [
    "FgnSpec",
    "FgnFactor",
    "FgnPredictor",
    "check_hurst",
    "fgn_autocorrelation",
    "fgn_correlation",
    "fgn_covariance",
    "factor_fgn",
    "sample_fgn",
    "fgn_conditional",
]

JITTER = 1e-10


def check_hurst(h):
    """Return ``h`` as float, rejecting values outside the open interval (0, 1)."""
    h = float(h)
    if not (0.0 < h < 1.0) or not np.isfinite(h):
        raise ConfigError(f"Hurst exponent must lie strictly inside (0, 1), got {h!r}")
    return h


@dataclass(frozen=True)
class FgnSpec:
    """Innovation law: fGn with Hurst exponent ``hurst`` and variance ``sigma2``."""

    hurst: float = 0.5
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hurst", check_hurst(self.hurst))
        sigma2 = float(self.sigma2)
        if not np.isfinite(sigma2) or sigma2 < 0:
            raise ConfigError(f"innovation variance sigma2 must be finite and >= 0, got {sigma2!r}")
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def std(self):
        return float(np.sqrt(self.sigma2))


def _integer_lags(tau):
    arr = np.asarray(tau)
    if arr.dtype.kind in "iu":
        return arr.astype(np.int64)
    if arr.dtype.kind == "f" and np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)):
        return arr.astype(np.int64)
    if arr.dtype.kind == "b":
        return arr.astype(np.int64)
    raise DataError(f"fGn lags must be integers, got {tau!r}")


def fgn_autocorrelation(tau, h):
    """Autocorrelation of unit-step fGn at integer lag(s) ``tau``.

    ``rho(tau) = 0.5 * (|tau+1|^2H - 2|tau|^2H + |tau-1|^2H)``, symmetric in
    ``tau`` and equal to 1 at lag zero. Accepts scalars or integer arrays.
    """
    h = check_hurst(h)
    lags = np.abs(_integer_lags(tau)).astype(float)
    two_h = 2.0 * h
    rho = 0.5 * ((lags + 1.0) ** two_h - 2.0 * lags**two_h + np.abs(lags - 1.0) ** two_h)
    rho = np.where(lags == 0, 1.0, rho)
    if np.ndim(rho) == 0:
        return float(rho)
    return rho


def fgn_correlation(t, h):
    """``t x t`` Toeplitz correlation matrix of fGn."""
    t = _check_horizon(t)
    return toeplitz(fgn_autocorrelation(np.arange(t), h))


def fgn_covariance(t, spec):
    """``t x t`` covariance of ``u_1..u_t``: ``sigma2 * rho(i - j)``."""
    return spec.sigma2 * fgn_correlation(t, spec.hurst)


def _check_horizon(t):
    if isinstance(t, bool) or not isinstance(t, numbers.Integral):
        raise ConfigError(f"horizon must be an integer, got {t!r}")
    if t < 1:
        raise ConfigError(f"horizon must be >= 1, got {t}")
    return int(t)


@dataclass(frozen=True)
class FgnFactor:
    """Lower Cholesky factor of the fGn correlation matrix.

    ``jitter`` is the diagonal loading that was needed, 0.0 in the normal case.
    """

    lower: np.ndarray
    jitter: float
    hurst: float

    @property
    def horizon(self):
        return self.lower.shape[0]


def _cholesky(a):
    c, info = lapack.dpotrf(a, lower=1, clean=1)
    return c, int(info)


def factor_fgn(t, h):
    """Cholesky-factor the ``t x t`` fGn correlation matrix.

    Retries once with ``1e-10`` added to the diagonal when round-off makes the
    matrix numerically indefinite; raises :class:`FactorizationError` carrying
    the failing pivot if that also fails.
    """
    r = fgn_correlation(t, h)
    lower, info = _cholesky(r)
    jitter = 0.0
    if info > 0:
        jitter = JITTER
        lower, info = _cholesky(r + jitter * np.eye(r.shape[0]))
        if info > 0:
            raise FactorizationError(info)
    return FgnFactor(lower=lower, jitter=jitter, hurst=check_hurst(h))


def sample_fgn(t, spec, rng, size=None, factor=None):
    """Draw fGn path(s) of length ``t`` from ``N(0, fgn_covariance(t, spec))``.

    Parameters
    ----------
    t : int
        Number of consecutive samples.
    spec : FgnSpec
    rng : numpy.random.Generator
    size : int, optional
        Number of independent paths. ``None`` returns a single vector of
        shape ``(t,)``, otherwise an array of shape ``(size, t)``.
    factor : FgnFactor, optional
        Pre-computed factor to reuse across calls.

    Returns
    -------
    numpy.ndarray
    """
    t = _check_horizon(t)
    shape = (t,) if size is None else (int(size), t)
    if spec.sigma2 == 0.0:
        return np.zeros(shape)
    if factor is None or factor.horizon != t or factor.hurst != spec.hurst:
        factor = factor_fgn(t, spec.hurst)
    eps = rng.standard_normal(shape)
    return spec.std * (eps @ factor.lower.T)


class FgnPredictor:
    """One-step Gaussian predictor for fGn, grown incrementally.

    Uses the Durbin-Levinson recursion: the prediction coefficients for
    ``u_t`` given ``u_{1:t-1}`` are derived from those for ``u_{t-1}`` in
    O(t) operations, so a filter that advances one step at a time pays O(t)
    per step for the coefficients. Variances are reported for unit
    ``sigma2``; scale by the innovation variance.

    Instances hold mutable caches; give each filter run its own.
    """

    def __init__(self, h):
        self.hurst = check_hurst(h)
        self._rho = np.array([1.0])
        # _coefs[k] predicts u_{k+1} from u_{1:k}, stored oldest-first
        self._coefs = [np.empty(0)]
        self._vars = [1.0]
        # most-recent-first form of the last coefficient vector
        self._a = np.empty(0)

    def _extend_rho(self, k):
        if self._rho.size <= k:
            self._rho = fgn_autocorrelation(np.arange(max(k + 1, 2 * self._rho.size)), self.hurst)

    def _grow(self, k):
        while len(self._coefs) <= k:
            j = len(self._coefs)  # number of past values for the new coefficients
            self._extend_rho(j)
            a_prev = self._a
            v_prev = self._vars[-1]
            rho = self._rho
            kappa = (rho[j] - a_prev @ rho[j - 1 : 0 : -1]) / v_prev
            a = np.empty(j)
            a[: j - 1] = a_prev - kappa * a_prev[::-1]
            a[j - 1] = kappa
            v = v_prev * (1.0 - kappa * kappa)
            if v <= 0.0:
                raise FactorizationError(j + 1, f"fGn prediction variance vanished at index {j + 1}")
            self._a = a
            self._coefs.append(a[::-1].copy())
            self._vars.append(v)

    def coefficients(self, n_past):
        """Oldest-first weights ``c`` so that ``E[u_{n+1} | u_{1:n}] = c @ u_{1:n}``."""
        self._grow(n_past)
        return self._coefs[n_past]

    def variance(self, n_past):
        """Conditional variance of ``u_{n+1}`` given ``n_past`` values, unit ``sigma2``."""
        self._grow(n_past)
        return self._vars[n_past]


def fgn_conditional(next_index, history, spec, predictor=None):
    """Gaussian law of ``u_t`` given ``u_{1:t-1}``.

    Parameters
    ----------
    next_index : int
        The index ``t`` of the innovation being predicted (1-based).
    history : array_like, shape (t - 1,) or (..., t - 1)
        Past innovations, oldest first. Leading axes are broadcast, so a whole
        particle cloud can be conditioned at once.
    spec : FgnSpec
    predictor : FgnPredictor, optional
        Cached predictor to reuse between calls with the same Hurst exponent.

    Returns
    -------
    mean : float or numpy.ndarray
    variance : float
    """
    history = np.asarray(history, dtype=float)
    n_past = int(next_index) - 1
    if n_past < 0 or history.shape[-1:] != (n_past,):
        raise DataError(
            f"history for index t={next_index} must have length {max(n_past, 0)}, "
            f"got shape {history.shape}"
        )
    if predictor is None:
        predictor = FgnPredictor(spec.hurst)
    elif predictor.hurst != spec.hurst:
        raise ConfigError("predictor Hurst exponent does not match the FgnSpec")
    mean = history @ predictor.coefficients(n_past) if n_past else np.zeros(history.shape[:-1])
    if np.ndim(mean) == 0:
        mean = float(mean)
    return mean, spec.sigma2 * predictor.variance(n_past)
