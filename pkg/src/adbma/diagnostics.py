"""Chain-output container and the efficiency metrics computed from it.

The metrics follow the usual MCMC efficiency stack for model-space samplers:
posterior inclusion probabilities, integrated autocorrelation time via a
Parzen lag window, effective sample size T / median(IACT) over the monitored
coordinates, and CPU-standardized efficiency ratios.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSeries,
    EmptyChain,
    NoMonitoredCoordinates,
    UnknownBaseline,
)

logger = logging.getLogger(__name__)

DEFAULT_PIP_THRESHOLD = 0.1
_VARIANCE_FLOOR = 1e-14


@dataclass
class ChainOutput:
    """Thinned, post-burn-in output of a single chain.

    ``samples`` is a (T, p) uint8 array of inclusion vectors; ``g_samples``
    is empty when g was held fixed.  ``d_snapshots`` holds one
    (block_index, SelectionProbs) pair per completed block.  Acceptance
    rates are None where the notion does not apply (model rate for Gibbs,
    g rate for fixed-g runs).
    """

    samples: np.ndarray
    g_samples: np.ndarray
    d_snapshots: list
    model_accept_rate: float | None
    cpu_seconds: float
    T: int
    seed: int
    model_accept_count: int = 0
    model_propose_count: int = 0
    g_accept_rate: float | None = None
    g_accept_count: int = 0
    g_step_count: int = 0
    warn_count: int = 0

    @property
    def p(self) -> int:
        return self.samples.shape[1]


@dataclass
class ReportRow:
    method: str
    ess: float
    cpu_seconds: float
    er: float
    re: float | None
    accept_rate: float | None


@dataclass
class EfficiencyReport:
    """Per-method efficiency rows, ordered as the runs were given."""

    rows: list[ReportRow] = field(default_factory=list)


def pip(output: ChainOutput) -> np.ndarray:
    """Posterior inclusion probabilities: coordinate-wise mean of the samples."""
    if output.T == 0:
        raise EmptyChain("cannot compute PIPs from an empty chain")
    return output.samples.mean(axis=0)


def parzen_window(x):
    """Parzen lag-window kernel, vectorized over |x| <= 1 and 0 beyond."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.zeros_like(x)
    inner = x <= 0.5
    out[inner] = 1.0 - 6.0 * x[inner] ** 2 + 6.0 * x[inner] ** 3
    mid = (x > 0.5) & (x <= 1.0)
    out[mid] = 2.0 * (1.0 - x[mid]) ** 3
    return out


def default_truncation(T: int) -> int:
    """Default lag-window truncation, min(T-1, ceil(3 * T^(1/3)))."""
    return min(T - 1, math.ceil(3.0 * T ** (1.0 / 3.0)))


def iact_parzen(series, trunc: int) -> float:
    """Integrated autocorrelation time via the Parzen lag-window estimator.

    tau = 1 + 2 * sum_{k=1}^{trunc} K(k/trunc) * rho_k, with rho_k the
    biased (divide-by-T) sample autocorrelations.  Values below 1, which
    arise from noise on nearly-iid series, are clamped to 1.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    T = x.shape[0]
    if T < 10:
        raise ValueError("series too short for an IACT estimate")
    if not 1 <= trunc < T:
        raise ValueError("trunc must lie in [1, T)")
    xc = x - x.mean()
    var = float(xc @ xc) / T
    if var < _VARIANCE_FLOOR:
        raise DegenerateSeries("series has (near-)zero sample variance")
    lags = np.arange(1, trunc + 1)
    rho = np.array([float(xc[:-k] @ xc[k:]) for k in lags]) / (T * var)
    tau = 1.0 + 2.0 * float(parzen_window(lags / trunc) @ rho)
    if tau < 1.0:
        logger.debug("IACT %.4f clamped to 1.0", tau)
        tau = 1.0
    return tau


def ess(output: ChainOutput, pip_threshold: float = DEFAULT_PIP_THRESHOLD,
        trunc: int | None = None):
    """Effective sample size T / M over the monitored coordinates.

    Monitored coordinates are those with PIP >= pip_threshold; M is the
    median IACT among them.  Coordinates whose series are constant are
    dropped from the median with a warning.  Returns (ess, monitored, M)
    where monitored is the index array of coordinates clearing the
    threshold.
    """
    pips = pip(output)
    monitored = np.flatnonzero(pips >= pip_threshold)
    if monitored.size == 0:
        raise NoMonitoredCoordinates(
            f"no coordinate has PIP >= {pip_threshold}"
        )
    if trunc is None:
        trunc = default_truncation(output.T)
    taus = []
    for i in monitored:
        try:
            taus.append(iact_parzen(output.samples[:, i], trunc))
        except DegenerateSeries:
            warnings.warn(
                f"coordinate {i} is constant over the chain; dropped from the"
                " IACT median", stacklevel=2)
    if not taus:
        raise NoMonitoredCoordinates("every monitored coordinate is degenerate")
    M = float(np.median(taus))
    return output.T / M, monitored, M


def efficiency_report(runs, baseline_map,
                      pip_threshold: float = DEFAULT_PIP_THRESHOLD,
                      trunc: int | None = None) -> EfficiencyReport:
    """Assemble the ESS / CPU / ER / RE / acceptance table for a set of runs.

    ``runs`` is a list of (name, ChainOutput); ``baseline_map`` maps the
    name of each adaptive run to the name of its non-adaptive baseline.
    ER = ESS / cpu_seconds, RE = ER(run) / ER(baseline).
    """
    ers: dict[str, float] = {}
    rows: list[ReportRow] = []
    names = {name for name, _ in runs}
    for name, baseline in baseline_map.items():
        if baseline not in names:
            raise UnknownBaseline(f"baseline {baseline!r} for {name!r} not in runs")
    for name, output in runs:
        sample_size, _, _ = ess(output, pip_threshold, trunc)
        er = sample_size / output.cpu_seconds
        ers[name] = er
        rows.append(ReportRow(
            method=name,
            ess=sample_size,
            cpu_seconds=output.cpu_seconds,
            er=er,
            re=None,
            accept_rate=output.model_accept_rate,
        ))
    for row in rows:
        baseline = baseline_map.get(row.method)
        if baseline is not None:
            row.re = row.er / ers[baseline]
    return EfficiencyReport(rows=rows)
