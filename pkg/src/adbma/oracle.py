"""Exact posterior by exhaustive enumeration of the model space.

Tractable only for small p, this is the ground truth against which the
samplers are validated: every one of the 2^p inclusion vectors is scored
with the same joint density the samplers target, normalized by
log-sum-exp.  A log-spaced quadrature over g extends the oracle to the
hyper-g/n prior.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .core_model import (
    G_MODE_BRIC,
    Dataset,
    Model,
    PriorConfig,
    log_g_prior,
    log_posterior_unnorm,
)
from .errors import ModelTooLarge, NonPositiveResidual, RankDeficient, TooManyVariables

ENUMERATION_P_CAP = 20
GRID_P_CAP = 15

_INVALID = (ModelTooLarge, RankDeficient, NonPositiveResidual)


@dataclass(frozen=True)
class ExactPosterior:
    """Normalized log posterior over all 2^p models at a fixed g.

    Model index m encodes the inclusion vector through its bits:
    gamma_i = (m >> i) & 1.  ``log_evidence`` is the log-sum of the
    unnormalized scores, useful for weighting g-slices.
    """

    log_probs: np.ndarray
    pips: np.ndarray
    g: float
    log_evidence: float

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)


def model_from_index(m: int, p: int) -> Model:
    gamma = np.fromiter(((m >> i) & 1 for i in range(p)), dtype=np.uint8, count=p)
    return Model.from_gamma(gamma)


def enumerate_posterior(data: Dataset, prior: PriorConfig, g: float) -> ExactPosterior:
    """Score every model at a fixed g and normalize.

    Models whose marginal likelihood is undefined (size above n - 2,
    rank-deficient selections) get zero posterior weight.
    """
    p = data.p
    if p > ENUMERATION_P_CAP:
        raise TooManyVariables(f"enumeration supports p <= {ENUMERATION_P_CAP}")
    n_models = 1 << p
    raw = np.full(n_models, -np.inf)
    for m in range(n_models):
        model = model_from_index(m, p)
        try:
            raw[m] = log_posterior_unnorm(model, g, data, prior)
        except _INVALID:
            continue
    log_evidence = float(logsumexp(raw))
    log_probs = raw - log_evidence
    probs = np.exp(log_probs)
    indices = np.arange(n_models)
    pips = np.empty(p)
    for i in range(p):
        pips[i] = probs[(indices >> i) & 1 == 1].sum()
    return ExactPosterior(log_probs=log_probs, pips=pips, g=g,
                          log_evidence=log_evidence)


def hyper_g_grid(n: int, a: float, num: int = 100, lo: float = 1e-2,
                 hi: float = 1e6):
    """Log-spaced quadrature grid and weights for the hyperprior on g.

    Trapezoid rule in u = log g, so each weight is pi(g) * g * du; the
    weights approximate the prior mass attached to each grid point.
    """
    u = np.linspace(np.log(lo), np.log(hi), num)
    g = np.exp(u)
    tw = np.full(num, u[1] - u[0]) if num > 1 else np.ones(1)
    if num > 1:
        tw[0] *= 0.5
        tw[-1] *= 0.5
    prior_density = np.exp([log_g_prior(gk, n, a) for gk in g])
    return g, prior_density * g * tw


def exact_pip_given_g_grid(data: Dataset, prior: PriorConfig, g_grid,
                           g_weights) -> np.ndarray:
    """Marginal PIPs under the hyperprior on g by quadrature over a grid.

    Each slice is enumerated without the g-prior factor (the weights carry
    it); slices are then combined with weights proportional to
    weight * per-slice evidence, a quadrature approximation of the joint
    posterior over (gamma, g).
    """
    if data.p > GRID_P_CAP:
        raise TooManyVariables(f"grid enumeration supports p <= {GRID_P_CAP}")
    g_grid = np.asarray(g_grid, dtype=np.float64)
    g_weights = np.asarray(g_weights, dtype=np.float64)
    if g_grid.shape != g_weights.shape or g_grid.ndim != 1 or g_grid.size == 0:
        raise ValueError("grid and weights must be equal-length vectors")
    if np.any(np.diff(g_grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    slice_prior = replace(prior, g_mode=G_MODE_BRIC)
    log_slice_weight = np.empty(g_grid.size)
    slice_pips = np.empty((g_grid.size, data.p))
    for k, gk in enumerate(g_grid):
        exact = enumerate_posterior(data, slice_prior, gk)
        log_slice_weight[k] = np.log(g_weights[k]) + exact.log_evidence
        slice_pips[k] = exact.pips
    omega = np.exp(log_slice_weight - logsumexp(log_slice_weight))
    return omega @ slice_pips
