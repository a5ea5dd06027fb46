"""Model-space samplers: single-flip Metropolis (MC3), random-scan Gibbs,
their adaptive variants, and the tuned random-walk move for g.

The adaptive variants periodically recompute the coordinate selection
probabilities as a mixture of a descriptive measure of per-variable activity
(sample variance or inclusion frequency of the recorded chain history) with
a uniform floor:

    d_i  proportional to  (1 - eps) * w_i + eps

which keeps every coordinate reachable while steering proposals away from
variables that never enter visited models.  Updates happen on a block
schedule in thinned-sample units, so the per-step change in the kernel
vanishes as the chain runs (the history statistics move by O(1/t)).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core_model import (
    G_MODE_HYPER,
    Dataset,
    Model,
    PriorConfig,
    g_bric,
    log_posterior_unnorm,
)
from .diagnostics import ChainOutput
from .errors import InvalidMeasure, ModelTooLarge, NonPositiveResidual, RankDeficient

MEASURE_NONE = "none"
MEASURE_VARIANCE = "s2"
MEASURE_FREQUENCY = "m"
MEASURES = (MEASURE_NONE, MEASURE_VARIANCE, MEASURE_FREQUENCY)

KIND_MC3 = "mc3"
KIND_GIBBS = "gibbs"

G_TARGET_ACCEPT = 0.44

_STEP_ERRORS = (ModelTooLarge, RankDeficient, NonPositiveResidual)


@dataclass
class SelectionProbs:
    """Coordinate selection probabilities with their provenance.

    ``w_max`` is the largest descriptive-measure value at the update that
    produced this vector (0 for the uniform initial state); it fixes the
    positivity floor eps / (p * ((1 - eps) * w_max + eps)) that every d_i
    must respect.
    """

    d: np.ndarray
    epsilon: float
    block_index: int
    w_max: float = 0.0
    cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=np.float64)
        if np.any(self.d <= 0.0):
            raise InvalidMeasure("selection probabilities must be strictly positive")
        total = float(self.d.sum())
        if abs(total - 1.0) > 1e-12:
            raise InvalidMeasure(f"selection probabilities sum to {total!r}, not 1")
        self.cum = np.cumsum(self.d)

    @classmethod
    def uniform(cls, p: int, epsilon: float, block_index: int = 0) -> "SelectionProbs":
        return cls(d=np.full(p, 1.0 / p), epsilon=epsilon, block_index=block_index)

    def floor(self) -> float:
        p = self.d.shape[0]
        return self.epsilon / (p * ((1.0 - self.epsilon) * self.w_max + self.epsilon))


def selection_probabilities(w, epsilon: float, block_index: int = 0) -> SelectionProbs:
    """Mixture selection probabilities d_i = ((1-eps) w_i + eps) / sum(...)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] < 1:
        raise InvalidMeasure("measure must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise InvalidMeasure("measure entries must be finite and non-negative")
    if not 0.0 < epsilon < 1.0:
        raise InvalidMeasure("epsilon must lie in (0, 1)")
    raw = (1.0 - epsilon) * w + epsilon
    return SelectionProbs(d=raw / raw.sum(), epsilon=epsilon,
                          block_index=block_index, w_max=float(w.max()))


@dataclass
class StreamingStats:
    """Running per-coordinate statistics of the recorded inclusion vectors."""

    t: int
    incl_count: np.ndarray

    @classmethod
    def empty(cls, p: int) -> "StreamingStats":
        return cls(t=0, incl_count=np.zeros(p, dtype=np.int64))

    def m(self) -> np.ndarray:
        """Inclusion frequencies of the recorded history."""
        if self.t == 0:
            return np.zeros_like(self.incl_count, dtype=np.float64)
        return self.incl_count / self.t

    def s2(self) -> np.ndarray:
        """Unbiased sample variances; the binary shortcut (t/(t-1)) m (1-m)
        is exact for 0/1 series."""
        if self.t < 2:
            return np.zeros_like(self.incl_count, dtype=np.float64)
        m = self.m()
        return (self.t / (self.t - 1.0)) * m * (1.0 - m)


def record_state(stats: StreamingStats, model: Model) -> StreamingStats:
    """Fold one recorded model into the running statistics (in place)."""
    stats.t += 1
    stats.incl_count += model.gamma
    return stats


@dataclass
class AdaptationConfig:
    """Block schedule and measure choice for adapting selection probabilities.

    ``block_len`` and ``start_block`` are in thinned-sample units.  With the
    fixed schedule, ``epsilon`` defaults to 1/p when left as None; the
    decreasing schedule uses eps_b = 1 / (b * p) at block b.
    """

    measure: str = MEASURE_NONE
    block_len: int = 1000
    start_block: int = 10
    epsilon_schedule: str = "fixed"
    epsilon: float | None = None

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.block_len < 1 or self.start_block < 1:
            raise ValueError("block_len and start_block must be >= 1")
        if self.epsilon_schedule not in ("fixed", "decreasing"):
            raise ValueError(f"unknown epsilon schedule {self.epsilon_schedule!r}")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("fixed epsilon must lie in (0, 1)")

    def epsilon_for_block(self, block: int, p: int) -> float:
        if self.epsilon_schedule == "decreasing":
            return 1.0 / (block * p)
        return self.epsilon if self.epsilon is not None else 1.0 / p


@dataclass
class ChainConfig:
    iterations: int
    burn_in: int
    thin: int = 1
    seed: int = 0
    sampler_kind: str = KIND_MC3
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)

    def __post_init__(self):
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.sampler_kind not in (KIND_MC3, KIND_GIBBS):
            raise ValueError(f"unknown sampler kind {self.sampler_kind!r}")


@dataclass
class SamplerState:
    """Full mutable state of one chain."""

    model: Model
    g: float
    log_post: float
    sel: SelectionProbs
    stats: StreamingStats
    g_log_scale: float = 0.0
    g_accept_count: int = 0
    g_step_count: int = 0
    model_accept_count: int = 0
    model_propose_count: int = 0
    warn_count: int = 0


def _draw_coordinate(sel: SelectionProbs, rng) -> int:
    i = int(np.searchsorted(sel.cum, rng.random(), side="right"))
    return min(i, sel.d.shape[0] - 1)


def _logistic(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def mc3_step(state: SamplerState, data: Dataset, prior: PriorConfig,
             rng) -> SamplerState:
    """One single-flip Metropolis move on the model.

    The proposal draws a coordinate from the current selection probabilities
    and flips it; since the same coordinate reverses the move, the selection
    probabilities cancel in the Hastings ratio and the acceptance probability
    is min{1, posterior ratio}.  Proposals whose marginal likelihood is
    undefined (too large or rank-deficient) reject.
    """
    i = _draw_coordinate(state.sel, rng)
    proposal = state.model.flipped(i)
    state.model_propose_count += 1
    try:
        lp_new = log_posterior_unnorm(proposal, state.g, data, prior)
    except _STEP_ERRORS:
        state.warn_count += 1
        return state
    log_r = lp_new - state.log_post
    if log_r >= 0.0 or rng.random() < math.exp(log_r):
        state.model = proposal
        state.log_post = lp_new
        state.model_accept_count += 1
    return state


def gibbs_step(state: SamplerState, data: Dataset, prior: PriorConfig,
               rng) -> SamplerState:
    """One random-scan Gibbs update of a single coordinate.

    Draws the coordinate from the selection probabilities, then samples
    gamma_i from its exact full conditional Bernoulli(p_i / (1 + p_i)) with
    log p_i the difference of the two one-sided log posteriors (the g-prior
    term cancels).  If the flipped side is invalid, its probability is 0 and
    the coordinate keeps its current value.
    """
    i = _draw_coordinate(state.sel, rng)
    current = int(state.model.gamma[i])
    flipped = state.model.flipped(i)
    try:
        lp_flip = log_posterior_unnorm(flipped, state.g, data, prior)
    except _STEP_ERRORS:
        state.warn_count += 1
        return state
    if current == 1:
        log_p = state.log_post - lp_flip
    else:
        log_p = lp_flip - state.log_post
    new_value = 1 if rng.random() < _logistic(log_p) else 0
    if new_value != current:
        state.model = flipped
        state.log_post = lp_flip
    return state


def g_move_log_ratio(lp_new: float, lp_cur: float, g_new: float,
                     g_cur: float) -> float:
    """Log acceptance ratio of the log-normal random-walk move on g.

    The log g terms are the proposal-asymmetry correction: a log-normal
    centred on the previous value has q(g | g') / q(g' | g) = g' / g.
    """
    return lp_new - lp_cur + math.log(g_new) - math.log(g_cur)


def tune_g_scale(g_log_scale: float, accepted: bool, step_count: int) -> float:
    """Robbins-Monro update of the proposal log-scale toward 0.44 acceptance."""
    eta = min(0.5, 10.0 / step_count)
    return g_log_scale + eta * ((1.0 if accepted else 0.0) - G_TARGET_ACCEPT)


def g_rwmh_step(state: SamplerState, data: Dataset, prior: PriorConfig,
                rng) -> SamplerState:
    """Random-walk Metropolis-Hastings move on g with scale tuning.

    No-op unless the prior puts a hyperprior on g.  Proposes
    g' = exp(log g + sigma z) and accepts with the ratio from
    :func:`g_move_log_ratio`; the proposal scale is then nudged toward the
    0.44 acceptance target with an O(1/t) gain.
    """
    if prior.g_mode != G_MODE_HYPER:
        return state
    state.g_step_count += 1
    sigma = math.exp(state.g_log_scale)
    g_new = math.exp(math.log(state.g) + sigma * rng.standard_normal())
    accepted = False
    try:
        lp_new = log_posterior_unnorm(state.model, g_new, data, prior)
    except _STEP_ERRORS:
        lp_new = None
    if lp_new is not None and math.isfinite(lp_new):
        log_r = g_move_log_ratio(lp_new, state.log_post, g_new, state.g)
        if log_r >= 0.0 or rng.random() < math.exp(log_r):
            state.g = g_new
            state.log_post = lp_new
            state.g_accept_count += 1
            accepted = True
    state.g_log_scale = tune_g_scale(state.g_log_scale, accepted,
                                     state.g_step_count)
    return state


def maybe_adapt(state: SamplerState, cfg: AdaptationConfig,
                thinned_index: int) -> SamplerState:
    """Recompute selection probabilities at block boundaries past start_block."""
    if cfg.measure == MEASURE_NONE:
        return state
    if thinned_index % cfg.block_len != 0:
        return state
    block = thinned_index // cfg.block_len
    if block < cfg.start_block:
        return state
    w = state.stats.s2() if cfg.measure == MEASURE_VARIANCE else state.stats.m()
    eps = cfg.epsilon_for_block(block, state.model.gamma.shape[0])
    state.sel = selection_probabilities(w, eps, block_index=block)
    return state


def initial_state(cfg: ChainConfig, data: Dataset, prior: PriorConfig) -> SamplerState:
    """Deterministic starting point: null model, g at its bric value or n."""
    g0 = g_bric(data.n, data.p) if prior.g_mode != G_MODE_HYPER else float(data.n)
    model = Model.empty(data.p)
    eps0 = cfg.adaptation.epsilon_for_block(1, data.p)
    return SamplerState(
        model=model,
        g=g0,
        log_post=log_posterior_unnorm(model, g0, data, prior),
        sel=SelectionProbs.uniform(data.p, eps0),
        stats=StreamingStats.empty(data.p),
    )


def run_chain(cfg: ChainConfig, data: Dataset, prior: PriorConfig,
              rng=None) -> ChainOutput:
    """Run one chain: burn-in, thinned recording, block-scheduled adaptation.

    Under a hyperprior on g the model move and the g move alternate once
    each per iteration.  History statistics accumulate over thinned
    post-burn-in samples only, and the selection probabilities are
    snapshotted at every completed block.  Identical (cfg, data, prior)
    with the same seed reproduce the output arrays bit for bit.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    state = initial_state(cfg, data, prior)
    step = mc3_step if cfg.sampler_kind == KIND_MC3 else gibbs_step
    hyper = prior.g_mode == G_MODE_HYPER
    adaptation = cfg.adaptation

    T = (cfg.iterations - cfg.burn_in) // cfg.thin
    samples = np.empty((T, data.p), dtype=np.uint8)
    g_samples = np.empty(T if hyper else 0, dtype=np.float64)
    snapshots: list[tuple[int, SelectionProbs]] = []
    thinned = 0

    t_start = time.perf_counter()
    for it in range(1, cfg.iterations + 1):
        step(state, data, prior, rng)
        if hyper:
            g_rwmh_step(state, data, prior, rng)
        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0 and thinned < T:
            samples[thinned] = state.model.gamma
            if hyper:
                g_samples[thinned] = state.g
            record_state(state.stats, state.model)
            thinned += 1
            maybe_adapt(state, adaptation, thinned)
            if thinned % adaptation.block_len == 0:
                snapshots.append((thinned // adaptation.block_len, state.sel))
    cpu_seconds = time.perf_counter() - t_start

    if cfg.sampler_kind == KIND_MC3:
        accept_rate = state.model_accept_count / state.model_propose_count
    else:
        accept_rate = None
    return ChainOutput(
        samples=samples,
        g_samples=g_samples,
        d_snapshots=snapshots,
        model_accept_rate=accept_rate,
        cpu_seconds=cpu_seconds,
        T=T,
        seed=cfg.seed,
        model_accept_count=state.model_accept_count,
        model_propose_count=state.model_propose_count,
        g_accept_rate=(state.g_accept_count / state.g_step_count) if hyper else None,
        g_accept_count=state.g_accept_count,
        g_step_count=state.g_step_count,
        warn_count=state.warn_count,
    )
