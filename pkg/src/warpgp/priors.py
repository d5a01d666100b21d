"""Prior and hyper-prior densities, with draws from truncated families.

The warp parameters carry a hierarchical random effect: their log-odds
transform is Gaussian with unknown location and scale, which themselves get
a truncated-normal / upper-truncated inverse-gamma hyper-prior. Decay
parameters get uniform priors whose bounds come from practical-range
arguments, so the circular decay support depends on the period and the
shared-time decay support on the current synchronization rates; both
conditional densities are normalized, which matters when the conditioning
parameters move.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaincc, gammainccinv, ndtr, ndtri

from .covariance import GlobalParams
from .grids import Dataset
from .params import ModelParams, WarpHyper

__all__ = [
    "PriorError",
    "PriorConfig",
    "ResolvedPriors",
    "TruncatedNormal",
    "TruncatedInvGamma",
    "log_prior",
    "sample_truncated",
]

_LOG_2PI = math.log(2.0 * math.pi)


class PriorError(ValueError):
    """Invalid prior configuration or an impossible truncation."""


@dataclass(frozen=True)
class PriorConfig:
    """Hyper-parameters of every prior; defaults follow the reference run.

    ``b_gamma=None`` resolves to twice the median observed signal length,
    and the frequency-decay bounds are derived from the grid's smallest and
    largest frequency distances, so both adapt to the dataset at hand.
    """

    b_zeta: float = 0.75
    b_delta: float = 0.75
    m0_zeta: float = 0.0
    v0_zeta: float = 0.75
    m0_delta: float = 0.0
    v0_delta: float = 0.75
    b_m: float = 5.0
    a0_v: float = 0.01
    b0_v: float = 0.01
    b_v: float = 0.75
    a_alpha: float = 0.0
    b_alpha: float = 0.2
    a_beta: float = 0.75
    b_beta: float = 1.0
    m_mu: float = 0.0
    v_mu: float = 1.0e5
    a_tau2: float = 1.0
    b_tau2: float = 1.0
    a_sigma: float = 1.0
    b_sigma: float = 1.0
    a_gamma: float = 0.02
    b_gamma: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.a_beta < self.b_beta <= 1.0):
            raise PriorError("need 0 <= a_beta < b_beta <= 1")
        if not (0.0 <= self.a_alpha < self.b_alpha < 1.0):
            raise PriorError("need 0 <= a_alpha < b_alpha < 1")
        if self.b_zeta <= 0 or self.b_delta <= 0 or self.b_m <= 0 or self.b_v <= 0:
            raise PriorError("truncation bounds must be positive")


@dataclass(frozen=True)
class ResolvedPriors:
    """PriorConfig plus the data-derived quantities the densities need."""

    config: PriorConfig
    b_gamma: float
    phi_h_lo: float
    phi_h_hi: float
    min_time_step: float
    lengths: tuple
    time_counts: tuple

    @classmethod
    def resolve(cls, config: PriorConfig, dataset: Dataset) -> "ResolvedPriors":
        lengths = tuple(float(s.length) for s in dataset.signals)
        b_gamma = config.b_gamma
        if b_gamma is None:
            b_gamma = 2.0 * float(np.median(lengths))
        if not b_gamma > config.a_gamma:
            raise PriorError(f"gamma support empty: ({config.a_gamma}, {b_gamma})")
        freq = dataset.freq.values
        dh_min = float(np.min(np.diff(freq)))
        dh_max = float(freq[-1] - freq[0])
        if dh_min >= dh_max:
            raise PriorError("frequency grid needs >= 3 bins to give the "
                             "frequency decay a non-degenerate support")
        return cls(
            config=config,
            b_gamma=b_gamma,
            phi_h_lo=-math.log(0.05) / dh_max,
            phi_h_hi=-math.log(0.05) / dh_min,
            min_time_step=min(float(s.time.step) for s in dataset.signals),
            lengths=lengths,
            time_counts=tuple(int(s.time.count) for s in dataset.signals),
        )

    def phi_c_bounds(self, gamma: float) -> tuple[float, float]:
        """Support of the circular decay given the period: correlation must
        exceed 0.05 at the smallest lag and fall below it at gamma/2."""
        lo = (1.0 - 0.05) / (0.05 * (0.5 * gamma))
        hi = (1.0 - 0.05) / (0.05 * self.min_time_step)
        return lo, hi

    def phi_d_bounds(self, beta_l: np.ndarray) -> tuple[float, float]:
        """Support of the shared-time decay given the synchronized extents
        beta_i*l_i; the smallest distance is one unwarped shared-time step."""
        beta_l = np.asarray(beta_l, dtype=np.float64)
        steps = beta_l / (np.asarray(self.time_counts) - 1.0)
        lo = (1.0 - 0.05) / (0.05 * float(beta_l.max()))
        hi = (1.0 - 0.05) / (0.05 * float(steps.min()))
        return lo, hi


def _log_norm(x: float, mean: float, var: float) -> float:
    return -0.5 * (_LOG_2PI + math.log(var) + (x - mean) ** 2 / var)


def _log_invgamma(x: float, a: float, b: float) -> float:
    if x <= 0:
        return -math.inf
    return a * math.log(b) - math.lgamma(a) - (a + 1.0) * math.log(x) - b / x


def _log_trunc_norm(x, mean, var, lo, hi) -> float:
    if not (lo < x < hi):
        return -math.inf
    sd = math.sqrt(var)
    z = ndtr((hi - mean) / sd) - ndtr((lo - mean) / sd)
    if z <= 0:
        return -math.inf
    return _log_norm(x, mean, var) - math.log(z)


def _log_trunc_invgamma(x, a, b, cap) -> float:
    if not (0 < x < cap):
        return -math.inf
    z = gammaincc(a, b / cap)
    if z <= 0:
        return -math.inf
    return _log_invgamma(x, a, b) - math.log(float(z))


def _log_uniform(x, lo, hi) -> float:
    if not (lo <= x <= hi) or hi <= lo:
        return -math.inf
    return -math.log(hi - lo)


def log_prior(params: ModelParams, hyper: WarpHyper,
              priors: ResolvedPriors) -> float:
    """Joint log prior density of a full parameter state.

    Evaluated on the natural parameterization: the warp random effects
    contribute their Gaussian density on the log-odds scale times the
    transform Jacobian 2b/(b^2 - x^2), and the uniform prior on the
    normalized rate contributes the Jacobian l/(1-alpha) of the map to the
    stored rate. Returns -inf outside any support.
    """
    cfg = priors.config
    g = params.globals_
    total = 0.0
    # hyper-priors of the warp random effect
    total += _log_trunc_norm(hyper.m_zeta, cfg.m0_zeta, cfg.v0_zeta,
                             -cfg.b_m, cfg.b_m)
    total += _log_trunc_norm(hyper.m_delta, cfg.m0_delta, cfg.v0_delta,
                             -cfg.b_m, cfg.b_m)
    total += _log_trunc_invgamma(hyper.v_zeta, cfg.a0_v, cfg.b0_v, cfg.b_v)
    total += _log_trunc_invgamma(hyper.v_delta, cfg.a0_v, cfg.b0_v, cfg.b_v)
    if not math.isfinite(total):
        return -math.inf

    beta_l = np.empty(params.n_signals)
    for i, sp in enumerate(params.signals):
        sync, nuis = sp.sync, sp.nuis
        l = priors.lengths[i]
        # warp random effects on the log-odds scale
        for x, b, m, v in ((sync.warp.zeta, cfg.b_zeta, hyper.m_zeta, hyper.v_zeta),
                           (sync.warp.delta, cfg.b_delta, hyper.m_delta, hyper.v_delta)):
            if not (-b < x < b):
                return -math.inf
            z = math.log((x + b) / (b - x))
            total += _log_norm(z, m, v) + math.log(2.0 * b / (b * b - x * x))
        # offset and normalized rate, with the rate-map Jacobian
        total += _log_uniform(sync.alpha, cfg.a_alpha, cfg.b_alpha)
        bt = sync.beta * l / (1.0 - sync.alpha)
        if not (cfg.a_beta <= bt <= cfg.b_beta):
            return -math.inf
        total += -math.log(cfg.b_beta - cfg.a_beta) + math.log(l / (1.0 - sync.alpha))
        beta_l[i] = sync.beta * l
        # nuisance level and variance
        total += _log_norm(nuis.mu, cfg.m_mu, cfg.v_mu)
        total += _log_invgamma(nuis.tau2, cfg.a_tau2, cfg.b_tau2)
        if not math.isfinite(total):
            return -math.inf

    total += _log_invgamma(g.sigma2, cfg.a_sigma, cfg.b_sigma)
    total += _log_uniform(g.lam, 0.0, 1.0)
    total += _log_uniform(g.rho, 0.0, 1.0)
    total += _log_uniform(g.gamma, cfg.a_gamma, priors.b_gamma)
    total += _log_uniform(g.phi_h, priors.phi_h_lo, priors.phi_h_hi)
    total += _log_uniform(g.phi_c, *priors.phi_c_bounds(g.gamma))
    total += _log_uniform(g.phi_d, *priors.phi_d_bounds(beta_l))
    return total if math.isfinite(total) else -math.inf


@dataclass(frozen=True)
class TruncatedNormal:
    mean: float
    var: float
    lower: float
    upper: float


@dataclass(frozen=True)
class TruncatedInvGamma:
    shape: float
    rate: float
    upper: float


def sample_truncated(dist, rng: np.random.Generator, size=None):
    """Inverse-CDF draws from a truncated normal or inverse-gamma.

    Raises PriorError when the truncation region carries no numerical mass.
    """
    u = rng.uniform(size=size)
    if isinstance(dist, TruncatedNormal):
        sd = math.sqrt(dist.var)
        plo = ndtr((dist.lower - dist.mean) / sd)
        phi = ndtr((dist.upper - dist.mean) / sd)
        if not phi > plo:
            raise PriorError(f"no mass in truncation ({dist.lower}, {dist.upper})")
        return dist.mean + sd * ndtri(plo + u * (phi - plo))
    if isinstance(dist, TruncatedInvGamma):
        p0 = gammaincc(dist.shape, dist.rate / dist.upper)
        if not p0 > 0:
            raise PriorError(f"no mass below {dist.upper}")
        return dist.rate / gammainccinv(dist.shape, u * p0)
    raise TypeError(f"unsupported distribution spec {type(dist)}")
