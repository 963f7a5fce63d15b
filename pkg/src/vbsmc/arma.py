"""
ARMA(m, n) latent processes driven by fGn innovations.

States and innovations are ordered oldest-first, so the banded transition
matrices are lower triangular. All recursions start from zero initial
conditions (``x_l = u_l = 0`` for ``l <= 0``), which is exactly what the
matrix form ``Phi x = Psi u`` encodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ConfigError
from .fgn import FgnSpec, _check_horizon, fgn_covariance, sample_fgn

__all__ = [
    "ArmaModel",
    "TransitionMatrices",
    "LatentTrajectory",
    "BENCHMARK_MODELS",
    "benchmark_model",
    "build_transition_matrices",
    "transfer_matrix",
    "arma_recursion",
    "simulate_recursive",
    "state_covariance",
]

ORDERING = "oldest-first, lower-triangular bands"


def _coef_vector(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float)).ravel() if values is not None else np.empty(0)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} coefficients must be finite, got {arr.tolist()}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ArmaModel:
    """ARMA(m, n) model ``x_t = sum phi_i x_{t-i} + sum varphi_j u_{t-j} + u_t``.

    Parameters
    ----------
    phi : array_like
        Autoregressive coefficients ``phi_1..phi_m`` (may be empty).
    varphi : array_like
        Moving-average coefficients ``varphi_1..varphi_n`` (may be empty).
    innovations : FgnSpec
        Law of the driving noise ``u_t``.
    name : str, optional
        Label carried into reports. Defaults to ``"ARMA(m,n)"``.
    """

    phi: np.ndarray = field(default_factory=lambda: np.empty(0))
    varphi: np.ndarray = field(default_factory=lambda: np.empty(0))
    innovations: FgnSpec = field(default_factory=FgnSpec)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "phi", _coef_vector(self.phi, "AR"))
        object.__setattr__(self, "varphi", _coef_vector(self.varphi, "MA"))
        if not isinstance(self.innovations, FgnSpec):
            raise ConfigError("innovations must be an FgnSpec")
        if not self.name:
            object.__setattr__(self, "name", f"ARMA({self.m},{self.n})")

    @property
    def m(self):
        return self.phi.size

    @property
    def n(self):
        return self.varphi.size

    def __eq__(self, other):
        if not isinstance(other, ArmaModel):
            return NotImplemented
        return (
            np.array_equal(self.phi, other.phi)
            and np.array_equal(self.varphi, other.varphi)
            and self.innovations == other.innovations
            and self.name == other.name
        )

    __hash__ = None

    def next_state(self, states, innovations):
        """Value of ``x_{t+1}`` for a batch of histories.

        ``states`` has shape ``(..., t)`` holding ``x_{1:t}`` and
        ``innovations`` has shape ``(..., t + 1)`` holding ``u_{1:t+1}``.
        """
        t = states.shape[-1]
        out = innovations[..., t].copy()
        for i in range(1, min(self.m, t) + 1):
            out += self.phi[i - 1] * states[..., t - i]
        for j in range(1, min(self.n, t) + 1):
            out += self.varphi[j - 1] * innovations[..., t - j]
        return out

    def to_dict(self):
        return {
            "kind": "arma",
            "name": self.name,
            "phi": self.phi.tolist(),
            "varphi": self.varphi.tolist(),
            "hurst": self.innovations.hurst,
            "sigma2": self.innovations.sigma2,
        }


# The six configurations simulated in the reference experiments.
_BENCHMARKS = {
    "ARMA(1,1)": ((0.85,), (0.8,), 0.7),
    "ARMA(2,1)": ((0.49, 0.49), (0.8,), 0.8),
    "AR(1)": ((0.6,), (), 0.7),
    "MA(1)": ((), (0.5,), 0.7),
    "AR(2)": ((0.49, 0.45), (), 0.8),
    "MA(2)": ((), (0.49, 0.47), 0.8),
}
BENCHMARK_MODELS = tuple(_BENCHMARKS)


def benchmark_model(name, sigma2=1.0):
    """One of the benchmark ARMA configurations, e.g. ``benchmark_model("AR(1)")``."""
    try:
        phi, varphi, hurst = _BENCHMARKS[name]
    except KeyError:
        raise ConfigError(f"unknown benchmark model {name!r}; choose from {list(_BENCHMARKS)}") from None
    return ArmaModel(phi, varphi, FgnSpec(hurst, sigma2), name=name)


@dataclass(frozen=True)
class TransitionMatrices:
    """Banded unit-triangular pair with ``phi_matrix @ x = psi_matrix @ u``."""

    phi_matrix: np.ndarray
    psi_matrix: np.ndarray
    ordering: str = ORDERING

    @property
    def horizon(self):
        return self.phi_matrix.shape[0]


@dataclass(frozen=True)
class LatentTrajectory:
    states: np.ndarray
    innovations_used: np.ndarray

    def __post_init__(self):
        if self.states.shape != self.innovations_used.shape:
            raise ValueError("states and innovations must share their length")


def _banded(t, diag_coefs):
    mat = np.eye(t)
    for k, c in enumerate(diag_coefs, start=1):
        if k >= t:
            break
        mat += np.diag(np.full(t - k, c), -k)
    return mat


def build_transition_matrices(model, t):
    t = _check_horizon(t)
    return TransitionMatrices(_banded(t, -model.phi), _banded(t, model.varphi))


def transfer_matrix(tm):
    """``Theta = Phi^{-1} Psi`` by forward substitution (no explicit inverse)."""
    return solve_triangular(tm.phi_matrix, tm.psi_matrix, lower=True, unit_diagonal=True)


def arma_recursion(model, u):
    """Run the ARMA recursion on given innovations.

    ``u`` may carry leading batch axes; time runs along the last axis.
    """
    u = np.asarray(u, dtype=float)
    x = np.zeros_like(u)
    for t in range(u.shape[-1]):
        x[..., t] = model.next_state(x[..., :t], u[..., : t + 1])
    return x


def simulate_recursive(model, t, rng):
    """Draw fGn innovations and push them through the ARMA recursion."""
    u = sample_fgn(t, model.innovations, rng)
    return LatentTrajectory(states=arma_recursion(model, u), innovations_used=u)


def state_covariance(model, t):
    """Covariance of ``x_{1:t}``: ``Theta C_u Theta^T``, symmetrized."""
    theta = transfer_matrix(build_transition_matrices(model, t))
    cov = theta @ fgn_covariance(t, model.innovations) @ theta.T
    return 0.5 * (cov + cov.T)
