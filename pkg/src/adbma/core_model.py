"""Analytic posterior ingredients for model-space sampling.

Everything here is a pure function of its inputs: the integrated marginal
likelihood of a model under the g-prior, the beta-binomial model-space prior
with its hyperparameters moment-matched to a target mean model size, the
hyperprior on g, and the joint unnormalized log posterior that the samplers
and the enumeration oracle both evaluate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack
from scipy.optimize import bisect
from scipy.special import betaln

from .errors import ModelTooLarge, NonPositiveResidual, NoSolution, RankDeficient

# rcond threshold on X_gamma'X_gamma; the QR diagonal ratio estimates its sqrt
_GRAM_RCOND_MIN = 1e-12

G_MODE_BRIC = "bric"
G_MODE_HYPER = "hyper"


@dataclass(frozen=True)
class Dataset:
    """Response vector and demeaned design matrix, immutable after construction.

    Build instances with :meth:`from_arrays`, which demeans the design columns
    and caches the centered response sum of squares.
    """

    y: np.ndarray
    X: np.ndarray
    y_tilde_ss: float
    n: int
    p: int
    columns: tuple[str, ...] | None = None

    @classmethod
    def from_arrays(cls, y, X, columns=None) -> "Dataset":
        y = np.array(y, dtype=np.float64).ravel()
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        n, p = X.shape
        if y.shape[0] != n:
            raise ValueError(f"y has {y.shape[0]} rows but X has {n}")
        if n < 3:
            raise ValueError("need at least 3 observations")
        if p < 1:
            raise ValueError("need at least 1 regressor")
        X = X - X.mean(axis=0)
        y_tilde = y - y.mean()
        ds = cls(
            y=y,
            X=X,
            y_tilde_ss=float(y_tilde @ y_tilde),
            n=n,
            p=p,
            columns=tuple(columns) if columns is not None else None,
        )
        ds.y.flags.writeable = False
        ds.X.flags.writeable = False
        return ds

    def validate(self):
        """Audit the construction invariants; raises AssertionError on breakage."""
        assert np.all(np.abs(self.X.mean(axis=0)) < 1e-10)
        ss = float(((self.y - self.y.mean()) ** 2).sum())
        assert abs(ss - self.y_tilde_ss) <= 1e-12 * max(1.0, abs(ss))
        assert self.n >= 3 and self.p >= 1


@dataclass
class Model:
    """Binary inclusion vector with a cached population count."""

    gamma: np.ndarray
    size: int

    @classmethod
    def from_gamma(cls, gamma) -> "Model":
        gamma = np.ascontiguousarray(gamma, dtype=np.uint8)
        return cls(gamma=gamma, size=int(gamma.sum()))

    @classmethod
    def empty(cls, p: int) -> "Model":
        return cls(gamma=np.zeros(p, dtype=np.uint8), size=0)

    def flipped(self, i: int) -> "Model":
        """Copy of the model with coordinate i toggled."""
        gamma = self.gamma.copy()
        gamma[i] ^= 1
        return Model(gamma=gamma, size=self.size + (1 if gamma[i] else -1))

    def with_coord(self, i: int, value: int) -> "Model":
        if self.gamma[i] == value:
            return self
        return self.flipped(i)


@dataclass(frozen=True)
class PriorConfig:
    """Model-space hyperparameters plus the choice of prior on g.

    ``b`` and ``c`` are the beta-binomial hyperparameters, normally obtained
    from :func:`solve_model_prior_hyperparams` so the prior model size has
    mean ``kappa`` and variance ``2*kappa*(p-kappa)/p``.  ``g_mode`` is
    either ``"bric"`` (g fixed at max{n, p^2}) or ``"hyper"`` (continuous
    hyperprior on g with parameter ``a``).
    """

    b: float
    c: float
    kappa: float
    g_mode: str = G_MODE_BRIC
    a: float = 3.0

    def __post_init__(self):
        if self.b <= 0 or self.c <= 0:
            raise ValueError("b and c must be positive")
        if self.g_mode not in (G_MODE_BRIC, G_MODE_HYPER):
            raise ValueError(f"unknown g_mode {self.g_mode!r}")
        if self.g_mode == G_MODE_HYPER and self.a <= 2:
            raise ValueError("hyper-g/n requires a > 2")

    @classmethod
    def from_kappa(cls, p: int, kappa: float, g_mode: str = G_MODE_BRIC,
                   a: float = 3.0) -> "PriorConfig":
        b, c = solve_model_prior_hyperparams(p, kappa)
        return cls(b=b, c=c, kappa=kappa, g_mode=g_mode, a=a)

    def validate(self, p: int):
        """Audit the moment equations against this config's kappa."""
        assert self.kappa < p
        mean = p * self.b / (self.b + self.c)
        assert abs(mean - self.kappa) <= 1e-8
        var = _beta_binomial_variance(p, self.b, self.c)
        assert abs(var - 2 * self.kappa * (p - self.kappa) / p) <= 1e-6


def _beta_binomial_variance(p: int, b: float, c: float) -> float:
    s = b + c
    return p * b * c * (s + p) / (s * s * (s + 1.0))


def solve_model_prior_hyperparams(p: int, kappa: float) -> tuple[float, float]:
    """Solve the two beta-binomial moment equations for (b, c).

    The mean equation p*b/(b+c) = kappa eliminates b, leaving a scalar
    root-find in c for the variance equation with target
    2*kappa*(p-kappa)/p.  Bisection on c in (1e-6, 1e6); raises NoSolution
    when the bracket does not straddle a root.
    """
    if not 0 < kappa < p:
        raise ValueError("kappa must lie strictly between 0 and p")
    target = 2.0 * kappa * (p - kappa) / p

    def residual(c):
        b = kappa * c / (p - kappa)
        return _beta_binomial_variance(p, b, c) - target

    lo, hi = 1e-6, 1e6
    r_lo, r_hi = residual(lo), residual(hi)
    if not np.isfinite(r_lo) or not np.isfinite(r_hi) or r_lo * r_hi > 0:
        raise NoSolution(
            f"variance target {target:.6g} is not attainable for p={p}, kappa={kappa}"
        )
    c = bisect(residual, lo, hi, xtol=1e-13, rtol=8.9e-16)
    b = kappa * c / (p - kappa)
    if abs(residual(c)) > 1e-10:
        raise NoSolution("bisection failed to reach the variance target")
    return float(b), float(c)


def g_bric(n: int, p: int) -> float:
    """Benchmark g value: max{n, p^2}."""
    return float(max(n, p * p))


def log_g_prior(g: float, n: int, a: float) -> float:
    """Log density of the hyper-g/n prior, (a-2)/(2n) * (1 + g/n)^(-a/2)."""
    return math.log((a - 2.0) / (2.0 * n)) - 0.5 * a * math.log1p(g / n)


def log_marginal_likelihood(model: Model, g: float, data: Dataset) -> float:
    """Log marginal likelihood of a model, up to a model-independent constant.

    Evaluates
        -(p_gamma/2) * log(1+g)
        - ((n-1)/2) * log( ytilde'ytilde - g/(1+g) * y'X_g (X_g'X_g)^-1 X_g'y )
    with the quadratic form obtained from a thin QR factorization of the
    selected columns (never an explicit inverse).  This is the sampler hot
    path, so it calls LAPACK directly instead of going through np.linalg.qr.
    """
    k = model.size
    n = data.n
    if k > n - 2:
        raise ModelTooLarge(f"model size {k} exceeds n - 2 = {n - 2}")
    if k == 0:
        return -0.5 * (n - 1) * math.log(data.y_tilde_ss)

    Xg = data.X[:, model.gamma.view(bool)]
    Xty = data.y @ Xg
    qr, _tau, _work, info = lapack.dgeqrf(Xg)
    if info != 0:
        raise RankDeficient(f"QR factorization failed (info={info})")
    r_diag = np.abs(np.diagonal(qr[:k, :k]))
    r_max = r_diag.max()
    if r_max == 0.0 or (r_diag.min() / r_max) ** 2 < _GRAM_RCOND_MIN:
        raise RankDeficient("X_gamma'X_gamma is numerically singular")
    # q = ||R^-T X_g'y||^2 = y'X_g (X_g'X_g)^-1 X_g'y
    z, info = lapack.dtrtrs(qr[:k, :k], Xty, lower=0, trans=1)
    if info != 0:
        raise RankDeficient("triangular solve failed")
    q = float(z @ z)
    bracket = data.y_tilde_ss - g / (1.0 + g) * q
    if bracket <= 0.0:
        raise NonPositiveResidual(f"residual term {bracket:.3e} is not positive")
    return -0.5 * k * math.log1p(g) - 0.5 * (n - 1) * math.log(bracket)


@lru_cache(maxsize=64)
def _log_model_prior_table(b: float, c: float, p: int) -> tuple:
    sizes = np.arange(p + 1)
    return tuple(betaln(b + sizes, c + p - sizes) - betaln(b, c))


def log_model_prior(model: Model, prior: PriorConfig, p: int) -> float:
    """Log of the w-marginalized model prior B(b+p_g, c+p-p_g) / B(b, c).

    Depends on the model only through its size, so values are served from a
    per-(b, c, p) table.
    """
    k = model.size
    if not 0 <= k <= p:
        raise ValueError("model size outside [0, p]")
    return _log_model_prior_table(prior.b, prior.c, p)[k]


def log_posterior_unnorm(model: Model, g: float, data: Dataset,
                         prior: PriorConfig) -> float:
    """Joint unnormalized log posterior; the single entry point samplers use.

    Under bric mode g is a fixed constant so its prior term is omitted;
    under hyper mode the g-prior density is included so the g-move sees the
    correct joint target.
    """
    lp = log_marginal_likelihood(model, g, data) + log_model_prior(model, prior, data.p)
    if prior.g_mode == G_MODE_HYPER:
        lp += log_g_prior(g, data.n, prior.a)
    return lp
