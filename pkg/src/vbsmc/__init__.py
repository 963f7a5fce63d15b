"""Particle filtering of fGn-driven ARMA/VAR processes observed through gamma noise."""

from .arma import (
    BENCHMARK_MODELS,
    ArmaModel,
    LatentTrajectory,
    TransitionMatrices,
    arma_recursion,
    benchmark_model,
    build_transition_matrices,
    simulate_recursive,
    state_covariance,
    transfer_matrix,
)
from .exceptions import (
    ConfigError,
    DataError,
    FactorizationError,
    NumericalError,
    VbsmcError,
    WeightUnderflowError,
)
from .fgn import (
    FgnPredictor,
    FgnSpec,
    factor_fgn,
    fgn_autocorrelation,
    fgn_conditional,
    fgn_covariance,
    sample_fgn,
)
from .obs import (
    GammaNoiseParams,
    ObservationChannel,
    log_likelihood,
    noise_mean,
    observe,
    sample_noise,
)
from .smc import (
    FilterConfig,
    FilterReport,
    ParticleCloud,
    ResamplingScheme,
    ess,
    estimate,
    init_cloud,
    propagate,
    resample_paper,
    resample_systematic,
    reweight,
    rmse_trace,
    run_filter,
)
from .var import Dataset, VarModel, filter_dataset, impute, simulate_var
from .variational import (
    FitnessEstimate,
    VariationalPosterior,
    fitness_estimate,
    kl_gamma,
    log_q_unnormalized,
)

__version__ = "0.1.0"
