"""Adaptive and non-adaptive MC3/Gibbs samplers for Bayesian model averaging
in normal linear regression, with an exact enumeration oracle and the usual
MCMC efficiency diagnostics."""

from .core_model import (
    G_MODE_BRIC,
    G_MODE_HYPER,
    Dataset,
    Model,
    PriorConfig,
    g_bric,
    log_g_prior,
    log_marginal_likelihood,
    log_model_prior,
    log_posterior_unnorm,
    solve_model_prior_hyperparams,
)
from .diagnostics import (
    ChainOutput,
    EfficiencyReport,
    efficiency_report,
    ess,
    iact_parzen,
    pip,
)
from .oracle import ExactPosterior, enumerate_posterior, exact_pip_given_g_grid
from .samplers import (
    AdaptationConfig,
    ChainConfig,
    SamplerState,
    SelectionProbs,
    StreamingStats,
    gibbs_step,
    g_rwmh_step,
    maybe_adapt,
    mc3_step,
    record_state,
    run_chain,
    selection_probabilities,
    tune_g_scale,
)

__all__ = [
    "AdaptationConfig",
    "ChainConfig",
    "ChainOutput",
    "Dataset",
    "EfficiencyReport",
    "ExactPosterior",
    "G_MODE_BRIC",
    "G_MODE_HYPER",
    "Model",
    "PriorConfig",
    "SamplerState",
    "SelectionProbs",
    "StreamingStats",
    "efficiency_report",
    "enumerate_posterior",
    "ess",
    "exact_pip_given_g_grid",
    "g_bric",
    "g_rwmh_step",
    "gibbs_step",
    "iact_parzen",
    "log_g_prior",
    "log_marginal_likelihood",
    "log_model_prior",
    "log_posterior_unnorm",
    "maybe_adapt",
    "mc3_step",
    "pip",
    "record_state",
    "run_chain",
    "selection_probabilities",
    "solve_model_prior_hyperparams",
    "tune_g_scale",
]

__version__ = "0.1.0"
