"""
Vector autoregressive latent processes, joint filtering of multi-series
datasets and imputation of missing cells.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataError
from .fgn import FgnSpec, _check_horizon, sample_fgn
from .smc import FilterReport, run_filter

__all__ = [
    "VarModel",
    "Dataset",
    "var_recursion",
    "sample_var_innovations",
    "simulate_var",
    "filter_dataset",
    "impute",
    "predicted_observation",
]


@dataclass(frozen=True, eq=False)
class VarModel:
    """VAR(k): ``x_t = sum_i W_i x_{t-i} + u_t`` over ``n`` series.

    Each innovation component is an independent fGn path sharing one
    :class:`FgnSpec`.
    """

    weights: np.ndarray
    innovations: FgnSpec = field(default_factory=FgnSpec)
    labels: tuple = ()
    name: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim == 2:
            w = w[None]
        if w.ndim != 3 or w.shape[0] < 1 or w.shape[1] != w.shape[2] or w.shape[1] < 1:
            raise ConfigError(f"VAR weights must be k matrices of shape (n, n), got array of shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ConfigError("VAR weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        labels = tuple(str(s) for s in self.labels) or tuple(f"x{i + 1}" for i in range(w.shape[1]))
        if len(labels) != w.shape[1]:
            raise ConfigError(f"expected {w.shape[1]} labels, got {len(labels)}")
        object.__setattr__(self, "labels", labels)
        if not self.name:
            object.__setattr__(self, "name", f"VAR({self.order})")

    @property
    def order(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.weights.shape[1]

    def next_state(self, states, innovations):
        """``x_{t+1}`` for histories of shape ``(..., t, n)`` and ``(..., t + 1, n)``."""
        t = states.shape[-2]
        out = innovations[..., t, :].copy()
        for i in range(1, min(self.order, t) + 1):
            out += states[..., t - i, :] @ self.weights[i - 1].T
        return out

    def to_dict(self):
        return {
            "kind": "var",
            "name": self.name,
            "weights": self.weights.tolist(),
            "labels": list(self.labels),
            "hurst": self.innovations.hurst,
            "sigma2": self.innovations.sigma2,
        }


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` observed series over ``T`` steps.

    ``series`` has shape ``(n, T)``; ``missing_mask`` is True where a value is
    missing (the stored value there is NaN).
    """

    series: np.ndarray
    missing_mask: np.ndarray = None
    labels: tuple = ()

    def __post_init__(self):
        series = np.atleast_2d(np.asarray(self.series, dtype=float))
        mask = np.isnan(series) if self.missing_mask is None else np.asarray(self.missing_mask, bool)
        if mask.shape != series.shape:
            raise DataError(f"mask shape {mask.shape} does not match series shape {series.shape}")
        series = np.where(mask, np.nan, series)
        if np.any(~mask & ~np.isfinite(series)):
            i, t = np.argwhere(~mask & ~np.isfinite(series))[0]
            raise DataError(f"series {i} has a non-finite value at step {t + 1}")
        labels = tuple(str(s) for s in self.labels) or tuple(f"x{i + 1}" for i in range(series.shape[0]))
        if len(labels) != series.shape[0]:
            raise DataError(f"expected {series.shape[0]} labels, got {len(labels)}")
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "missing_mask", mask)
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self):
        return self.series.shape

    def check_support(self):
        """Raise :class:`DataError` if an observed cell is negative.

        Imputed latent values may be negative, so this is enforced on data
        entering the filter rather than on every Dataset.
        """
        bad = ~self.missing_mask & (np.nan_to_num(self.series) < 0)
        if np.any(bad):
            i, t = np.argwhere(bad)[0]
            raise DataError(f"series {self.labels[i]!r} has a negative value at step {t + 1}")
        return self

    def masked(self, mask):
        """Copy with additional cells hidden."""
        return Dataset(self.series, self.missing_mask | np.asarray(mask, bool), self.labels)


def var_recursion(model, u):
    """Apply the VAR recursion to innovations ``u`` of shape ``(..., T, n)``."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != model.dim:
        raise DataError(f"innovations have {u.shape[-1]} components, model has {model.dim}")
    x = np.zeros_like(u)
    for t in range(u.shape[-2]):
        x[..., t, :] = model.next_state(x[..., :t, :], u[..., : t + 1, :])
    return x


def sample_var_innovations(model, t, rng):
    """Independent fGn path per series; shape ``(t, n)``."""
    return sample_fgn(t, model.innovations, rng, size=model.dim).T


def simulate_var(model, t, rng):
    """Latent VAR path with zero initial conditions, shape ``(n, t)``."""
    t = _check_horizon(t)
    return var_recursion(model, sample_var_innovations(model, t, rng)).T


def filter_dataset(model, data, config, truth=None):
    """Filter all series jointly; returns one :class:`FilterReport` per series.

    Particles carry ``n``-vectors. Missing cells add no likelihood factor, so
    at those cells the estimate is the filter's prediction.

    Parameters
    ----------
    model : VarModel
    data : Dataset
    config : FilterConfig
        Its ``model`` is replaced by ``model``.
    truth : array_like, shape (n, T), optional
    """
    if data.shape[0] != model.dim:
        raise DataError(f"dataset has {data.shape[0]} series, model expects {model.dim}")
    if tuple(data.labels) != tuple(model.labels):
        raise DataError(f"dataset labels {list(data.labels)} do not match model labels {list(model.labels)}")
    data.check_support()
    cfg = dataclasses.replace(config, model=model)
    truth_t = None if truth is None else np.asarray(truth, dtype=float).T
    joint = run_filter(cfg, data.series.T, truth=truth_t, observed=~data.missing_mask.T)
    reports = []
    for i, label in enumerate(model.labels):
        reports.append(
            FilterReport(
                estimates=joint.estimates[:, i].copy(),
                ess_trace=joint.ess_trace,
                resample_counts=joint.resample_counts,
                truth=None if joint.truth is None else joint.truth[:, i].copy(),
                rmse_trace=None if joint.rmse_trace is None else joint.rmse_trace[:, i].copy(),
                config=joint.config,
                metadata={"series": label, "index": i},
                weight_error=joint.weight_error,
            )
        )
    return reports


def predicted_observation(estimates, noise):
    """Plug-in observation-scale value ``E[v] exp(xhat / 2)``."""
    return noise.mean() * np.exp(0.5 * np.asarray(estimates, dtype=float))


def impute(reports, data, fill="latent", noise=None):
    """Fill the missing cells of ``data`` from per-series filter reports.

    ``fill="latent"`` writes the latent-state estimates; ``fill="observation"``
    maps them to the observation scale with :func:`predicted_observation`
    (requires ``noise``). Observed cells are copied unchanged.
    """
    est = np.vstack([np.asarray(r.estimates, dtype=float) for r in reports]) if reports else np.empty((0, 0))
    if est.shape != data.shape:
        raise DataError(f"reports cover shape {est.shape}, dataset has shape {data.shape}")
    if fill == "observation":
        if noise is None:
            raise ConfigError("observation-scale imputation needs the gamma noise parameters")
        est = predicted_observation(est, noise)
    elif fill != "latent":
        raise ConfigError(f"fill must be 'latent' or 'observation', got {fill!r}")
    out = np.where(data.missing_mask, est, data.series)
    return Dataset(out, np.zeros(data.shape, bool), data.labels)
