"""Beta-CDF time warping and the per-signal synchronization map.

Each signal's real-time interval [0, l] is mapped to a shared-time
interval [alpha, alpha + beta*l] through a monotone warp of the unit
interval, so that signals recorded at different speeds and offsets can be
compared on one latent time axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "WarpError",
    "WarpParams",
    "SyncParams",
    "regularized_beta_cdf",
    "warp",
    "synchronize",
    "beta_from_tilde",
]

_BOUNDARY_EPS = 1e-12
_CF_TOL = 1e-14
_CF_MAX_ITER = 300


class WarpError(ValueError):
    """Domain violation or non-convergence in the warping functions."""


@dataclass(frozen=True)
class WarpParams:
    """Warp shape parameters; exp(zeta), exp(delta) are the Beta CDF shapes."""

    zeta: float = 0.0
    delta: float = 0.0

    def check_bounds(self, b_zeta: float, b_delta: float) -> None:
        if not (abs(self.zeta) < b_zeta and abs(self.delta) < b_delta):
            raise WarpError(
                f"warp parameters ({self.zeta}, {self.delta}) outside "
                f"(+/-{b_zeta}, +/-{b_delta})"
            )


@dataclass(frozen=True)
class SyncParams:
    """Per-signal synchronization: shared-time offset, rate, and warp."""

    alpha: float
    beta: float
    warp: WarpParams = WarpParams()

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise WarpError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise WarpError(f"beta must be > 0, got {self.beta}")

    def beta_tilde(self, l: float) -> float:
        """Normalized rate beta*l/(1-alpha); in (0, 1] for valid states."""
        if self.alpha >= 1:
            raise WarpError("alpha must be < 1 to normalize the rate")
        return self.beta * l / (1.0 - self.alpha)


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta, modified Lentz iteration.
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        de = d * c
        h *= de
        if abs(de - 1.0) < _CF_TOL:
            return h
    raise WarpError(f"incomplete beta continued fraction did not converge "
                    f"for a={a}, b={b}, x={x}")


def regularized_beta_cdf(q: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_q(a, b).

    Evaluated through the continued-fraction expansion with modified Lentz
    iteration, switching to the symmetry identity I_q(a,b) = 1 - I_{1-q}(b,a)
    when q > (a+1)/(a+b+2). Exact 0 at q=0 and 1 at q=1.
    """
    if not (a > 0 and b > 0):
        raise WarpError(f"beta shapes must be positive, got a={a}, b={b}")
    if not (0.0 <= q <= 1.0):
        raise WarpError(f"q={q} outside [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(q) + b * math.log1p(-q))
    if q < (a + 1.0) / (a + b + 2.0):
        return math.exp(ln_bt) * _betacf(a, b, q) / a
    return 1.0 - math.exp(ln_bt) * _betacf(b, a, 1.0 - q) / b


def warp(q: float, xi: WarpParams) -> float:
    """Monotone warp of [0,1]: the Beta CDF with shapes exp(zeta), exp(delta).

    Reduces to the identity when zeta = delta = 0.
    """
    return regularized_beta_cdf(q, math.exp(xi.zeta), math.exp(xi.delta))


def synchronize(t: float, chi: SyncParams, l: float) -> float:
    """Map real time t in [0, l] to shared time alpha + beta*warp(t/l)*l.

    Inputs within 1e-12 of the boundary are clamped to it (grid arithmetic
    produces endpoints that are off by a few ulps).
    """
    if l <= 0:
        raise WarpError(f"signal length must be positive, got {l}")
    if abs(t) <= _BOUNDARY_EPS:
        t = 0.0
    elif abs(t - l) <= _BOUNDARY_EPS:
        t = l
    if not (0.0 <= t <= l):
        raise WarpError(f"t={t} outside [0, {l}]")
    return chi.alpha + chi.beta * warp(t / l, chi.warp) * l


def beta_from_tilde(tilde_beta: float, alpha: float, l: float) -> float:
    """Rate beta from its normalized form: beta = tilde_beta*(1-alpha)/l.

    With tilde_beta in (0, 1] the synchronized endpoint
    alpha + beta*l = alpha + tilde_beta*(1-alpha) stays within [0, 1].
    """
    if alpha >= 1.0:
        raise WarpError(f"alpha={alpha} must be < 1")
    if not (0.0 < tilde_beta <= 1.0):
        raise WarpError(f"tilde_beta={tilde_beta} outside (0, 1]")
    if l <= 0:
        raise WarpError(f"signal length must be positive, got {l}")
    return tilde_beta * (1.0 - alpha) / l
