"""Correlation kernels and the marginal cross-signal covariance.

Two correlation families act on the lattice: a non-separable kernel on
(shared-time distance, log-frequency distance) for the synchronized sound,
and its circular-time counterpart for periodic sampling artifacts. The
marginal covariance of the observed intensities is the variance-weighted
mix of the two plus an observation nugget on identical lattice points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .warping import SyncParams, synchronize

__all__ = [
    "CovarianceError",
    "GlobalParams",
    "NuisanceParams",
    "SignalParams",
    "LatticePoint",
    "circ_dist",
    "gneiting_shared",
    "gneiting_circular",
    "shared_time_dist",
    "marginal_cov",
    "build_cov_matrix",
    "practical_ranges",
    "cholesky_with_jitter",
]

#: relative diagonal jitter used for one positive-definiteness retry
PD_JITTER = 1e-10


class CovarianceError(ValueError):
    """Invalid kernel parameters or a non-factorizable covariance."""


@dataclass(frozen=True)
class GlobalParams:
    """Kernel parameters shared by all signals of one species.

    sigma2   total process variance
    lam      weight of the shared-time component, in [0, 1]
    phi_d    shared-time decay (> 0)
    phi_c    circular-time decay (> 0)
    phi_h    log-frequency decay (> 0), shared by both kernels
    rho      time-frequency interaction, in [0, 1], shared by both kernels
    gamma    artifact period in seconds (> 0)
    """

    sigma2: float
    lam: float
    phi_d: float
    phi_c: float
    phi_h: float
    rho: float
    gamma: float

    def __post_init__(self):
        ok = (
            self.sigma2 > 0
            and 0.0 <= self.lam <= 1.0
            and self.phi_d > 0
            and self.phi_c > 0
            and self.phi_h > 0
            and 0.0 <= self.rho <= 1.0
            and self.gamma > 0
        )
        vals = (self.sigma2, self.lam, self.phi_d, self.phi_c, self.phi_h,
                self.rho, self.gamma)
        if not ok or not all(math.isfinite(v) for v in vals):
            raise CovarianceError(f"invalid global parameters {vals}")


@dataclass(frozen=True)
class NuisanceParams:
    """Per-signal intensity level mu (dB) and observation variance tau2 (dB^2)."""

    mu: float
    tau2: float

    def __post_init__(self):
        if not (self.tau2 > 0 and math.isfinite(self.tau2) and math.isfinite(self.mu)):
            raise CovarianceError(f"invalid nuisance parameters ({self.mu}, {self.tau2})")


@dataclass(frozen=True)
class SignalParams:
    """All signal-specific parameters: synchronization plus nuisance."""

    sync: SyncParams
    nuis: NuisanceParams


@dataclass(frozen=True)
class LatticePoint:
    """A lattice point with coordinates: 1-based indices plus (t, h) values."""

    signal: int
    time_index: int
    freq_index: int
    t: float
    h: float


def circ_dist(dt, gamma: float):
    """Circular time distance: min(dt mod gamma, gamma - dt mod gamma).

    Periodic with period gamma; result lies in [0, gamma/2]. Accepts scalars
    or arrays.
    """
    if gamma <= 0:
        raise CovarianceError(f"gamma must be positive, got {gamma}")
    r = np.fmod(np.abs(dt), gamma)
    out = np.minimum(r, gamma - r)
    if np.isscalar(dt):
        return float(out)
    return out


def _gneiting(dist, dh, phi_t: float, phi_h: float, rho: float):
    u = phi_t * np.asarray(dist, dtype=np.float64) + 1.0
    return (1.0 / u) * np.exp(-phi_h * np.asarray(dh, dtype=np.float64) / u ** (rho / 2.0))


def gneiting_shared(dd, dh, p: GlobalParams):
    """Non-separable correlation on (shared-time distance, frequency distance).

    Equals 1 iff both distances are zero; non-increasing in each argument;
    factorizes into a product of the two marginals when rho = 0.
    """
    out = _gneiting(dd, dh, p.phi_d, p.phi_h, p.rho)
    return float(out) if np.isscalar(dd) and np.isscalar(dh) else out


def gneiting_circular(dt, dh, p: GlobalParams):
    """Circular-time counterpart: the time lag is wrapped to period gamma."""
    out = _gneiting(circ_dist(dt, p.gamma), dh, p.phi_c, p.phi_h, p.rho)
    return float(out) if np.isscalar(dt) and np.isscalar(dh) else out


def shared_time_dist(t: float, t2: float, chi_i: SyncParams, chi_j: SyncParams,
                     l_i: float, l_j: float) -> float:
    """Distance between two real-time points after synchronization."""
    return abs(synchronize(t, chi_i, l_i) - synchronize(t2, chi_j, l_j))


def marginal_cov(a: LatticePoint, b: LatticePoint, globals_: GlobalParams,
                 sync: Mapping[int, SyncParams], lengths: Mapping[int, float],
                 nuis: Mapping[int, NuisanceParams] | None = None,
                 nugget: bool = True) -> float:
    """Marginal covariance between two observed lattice points.

    sigma2*lam times the shared-time kernel at the synchronized distance,
    plus sigma2*(1-lam) times the circular kernel at the real-time lag. The
    nugget tau_i^2 is added only when the (signal, time, frequency) triples
    coincide; cross-signal covariances never carry a nugget.
    """
    dd = shared_time_dist(a.t, b.t, sync[a.signal], sync[b.signal],
                          lengths[a.signal], lengths[b.signal])
    dh = abs(a.h - b.h)
    c = globals_.sigma2 * (
        globals_.lam * gneiting_shared(dd, dh, globals_)
        + (1.0 - globals_.lam) * gneiting_circular(abs(a.t - b.t), dh, globals_)
    )
    same = (a.signal, a.time_index, a.freq_index) == (b.signal, b.time_index, b.freq_index)
    if nugget and same:
        if nuis is None:
            raise CovarianceError("nugget requested but no nuisance parameters given")
        c += nuis[a.signal].tau2
    return c


def build_cov_matrix(points: Sequence[LatticePoint], globals_: GlobalParams,
                     sync: Mapping[int, SyncParams], lengths: Mapping[int, float],
                     nuis: Mapping[int, NuisanceParams] | None = None,
                     nugget: bool = True) -> np.ndarray:
    """Dense covariance matrix over a list of lattice points.

    With ``nugget=True`` (observed-data blocks) each diagonal entry gains its
    signal's tau^2; with ``nugget=False`` (latent-shape blocks) the matrix is
    the bare process covariance.
    """
    n = len(points)
    sig = np.array([p.signal for p in points])
    tix = np.array([p.time_index for p in points])
    fix = np.array([p.freq_index for p in points])
    t = np.array([p.t for p in points])
    h = np.array([p.h for p in points])
    # Warped times, one synchronize() call per distinct (signal, time) pair.
    psi = np.empty(n)
    cache: dict[tuple[int, int], float] = {}
    for idx, p in enumerate(points):
        key = (p.signal, p.time_index)
        if key not in cache:
            cache[key] = synchronize(p.t, sync[p.signal], lengths[p.signal])
        psi[idx] = cache[key]
    if not np.all(np.isfinite(psi)):
        raise CovarianceError("non-finite synchronized time")

    dd = np.abs(psi[:, None] - psi[None, :])
    dh = np.abs(h[:, None] - h[None, :])
    dtc = circ_dist(np.abs(t[:, None] - t[None, :]), globals_.gamma)
    cov = globals_.sigma2 * (
        globals_.lam * _gneiting(dd, dh, globals_.phi_d, globals_.phi_h, globals_.rho)
        + (1.0 - globals_.lam) * _gneiting(dtc, dh, globals_.phi_c, globals_.phi_h, globals_.rho)
    )
    if nugget:
        if nuis is None:
            raise CovarianceError("nugget requested but no nuisance parameters given")
        same = ((sig[:, None] == sig[None, :])
                & (tix[:, None] == tix[None, :])
                & (fix[:, None] == fix[None, :]))
        tau = np.array([nuis[s].tau2 for s in sig])
        cov[same] += np.broadcast_to(tau[:, None], (n, n))[same]
    if not np.all(np.isfinite(cov)):
        raise CovarianceError("non-finite covariance entry")
    return cov


def practical_ranges(p: GlobalParams) -> tuple[float, float, float]:
    """Distances at which each separable correlation factor drops to 0.05.

    Returns (pr_h, pr_d, pr_c): -log(0.05)/phi_h for the frequency factor and
    0.95/(0.05*phi) for the two time factors.
    """
    pr_h = -math.log(0.05) / p.phi_h
    pr_d = (1.0 - 0.05) / (0.05 * p.phi_d)
    pr_c = (1.0 - 0.05) / (0.05 * p.phi_c)
    return pr_h, pr_d, pr_c


def cholesky_with_jitter(mat: np.ndarray, sigma2: float) -> np.ndarray:
    """Lower Cholesky factor, retrying once with a PD_JITTER*sigma2 diagonal.

    A second failure raises CovarianceError rather than masking a modelling
    bug behind ever-larger jitter.
    """
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        pass
    bumped = mat + (PD_JITTER * sigma2) * np.eye(mat.shape[0])
    try:
        return np.linalg.cholesky(bumped)
    except np.linalg.LinAlgError:
        raise CovarianceError(
            f"covariance not positive definite after jitter retry "
            f"(n={mat.shape[0]})"
        ) from None
