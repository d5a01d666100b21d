"""Posterior sampling of the representative spectrogram.

For each (remapped) posterior sample, a fresh warp is drawn from the
fitted random-effect law, the requested grid is synchronized onto [0, 1]
(offset 0, unit rate, so the new sound spans everything the data span),
and the latent surface is drawn from its Gaussian conditional on the
observed intensities.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .covariance import (
    CovarianceError,
    GlobalParams,
    cholesky_with_jitter,
    circ_dist,
    _gneiting,
)
from .grids import Dataset, FrequencyGrid, validate_dataset
from .mcmc import PosteriorSample
from .warping import WarpParams, warp

__all__ = [
    "PredictionError",
    "ShapeRequest",
    "ShapeDraw",
    "conditional_mvn",
    "sample_shape",
    "shape_summary",
    "draw_warp_effect",
]

logger = logging.getLogger(__name__)


class PredictionError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeRequest:
    """Grid and conditioning budget for the representative sound.

    ``m_cond`` is the number of highest-covariance observed points kept per
    latent grid point (their union is conditioned on jointly); ``None``
    conditions on all observed points, 0 requests prior draws.
    """

    length: float
    step: float = 0.01
    freq: FrequencyGrid = None
    m_cond: int | None = 40

    def __post_init__(self):
        if not (self.length > 0 and self.step > 0 and self.length >= self.step):
            raise PredictionError("need length >= step > 0")
        if self.freq is None:
            object.__setattr__(self, "freq", FrequencyGrid.default())

    def times(self) -> np.ndarray:
        n = int(math.floor(self.length / self.step + 1e-9)) + 1
        return np.arange(n) * self.step


@dataclass(frozen=True)
class ShapeDraw:
    sample_index: int
    xi: WarpParams
    values: np.ndarray  # (n_times, n_freq)


def conditional_mvn(mu_a: np.ndarray, mu_y: np.ndarray, cov_aa: np.ndarray,
                    cov_ay: np.ndarray, cov_yy: np.ndarray, y: np.ndarray,
                    sigma2: float | None = None):
    """Gaussian conditional of the first block given the second.

    Returns (mean, cov): mean = mu_a + cov_ay cov_yy^{-1} (y - mu_y) and
    cov = cov_aa - cov_ay cov_yy^{-1} cov_ay^T, computed through one
    Cholesky factorization of cov_yy (with the standard jitter retry).
    """
    if cov_yy.shape[0] == 0:
        return np.asarray(mu_a, dtype=float).copy(), cov_aa.copy()
    s2 = sigma2 if sigma2 is not None else float(np.max(np.diag(cov_yy)))
    L = cholesky_with_jitter(cov_yy, s2)
    from scipy.linalg import solve_triangular
    w = solve_triangular(L, np.asarray(y, dtype=float) - mu_y, lower=True,
                         check_finite=False)
    V = solve_triangular(L, cov_ay.T, lower=True, check_finite=False)
    mean = np.asarray(mu_a, dtype=float) + V.T @ w
    cov = cov_aa - V.T @ V
    return mean, cov


def shape_shared_times(request: ShapeRequest, xi: WarpParams) -> np.ndarray:
    """Shared-time coordinate of each requested grid time.

    The representative sound is pinned to offset 0 and unit span, so the
    map is just the warp of t/length; the endpoints land on 0 and 1
    exactly.
    """
    return np.array([warp(min(t / request.length, 1.0), xi)
                     for t in request.times()])


def draw_warp_effect(hyper, b_zeta: float, b_delta: float,
                     rng: np.random.Generator) -> WarpParams:
    """One warp draw from the fitted random-effect law (log-odds Gaussian)."""
    z = rng.normal(hyper.m_zeta, math.sqrt(hyper.v_zeta))
    d = rng.normal(hyper.m_delta, math.sqrt(hyper.v_delta))
    return WarpParams(zeta=b_zeta * math.tanh(0.5 * z),
                      delta=b_delta * math.tanh(0.5 * d))


def _observed_arrays(dataset: Dataset, sample: PosteriorSample):
    """Per observed point: warped time, real time, freq value, y, mu, tau2."""
    params = sample.to_model_params()
    wt, rt, hv, yv, mv, tv, sg = [], [], [], [], [], [], []
    for i, spec in enumerate(dataset.signals):
        sync = params.signals[i].sync
        l = spec.length
        times = spec.time.coords()
        psi = np.array([warp(t / l if l > 0 else 0.0, sync.warp) for t in times])
        psi = sync.alpha + sync.beta * psi * l
        T, H = spec.values.shape
        jj, kk = np.meshgrid(np.arange(T), np.arange(H), indexing="ij")
        keep = spec.mask.ravel() if spec.mask is not None else np.ones(T * H, bool)
        wt.append(np.repeat(psi, H)[keep])
        rt.append(np.repeat(times, H)[keep])
        hv.append(np.tile(spec.freq.values, T)[keep])
        yv.append(spec.values.ravel()[keep])
        mv.append(np.full(keep.sum(), params.signals[i].nuis.mu))
        tv.append(np.full(keep.sum(), params.signals[i].nuis.tau2))
        sg.append(np.full(keep.sum(), i))
    return (np.concatenate(wt), np.concatenate(rt), np.concatenate(hv),
            np.concatenate(yv), np.concatenate(mv), np.concatenate(tv))


def _cross_cov(g: GlobalParams, wt_a, rt_a, h_a, wt_b, rt_b, h_b) -> np.ndarray:
    """Process covariance (no nugget) between two point blocks."""
    dd = np.abs(wt_a[:, None] - wt_b[None, :])
    dtc = circ_dist(np.abs(rt_a[:, None] - rt_b[None, :]), g.gamma)
    dh = np.abs(h_a[:, None] - h_b[None, :])
    return g.sigma2 * (
        g.lam * _gneiting(dd, dh, g.phi_d, g.phi_h, g.rho)
        + (1.0 - g.lam) * _gneiting(dtc, dh, g.phi_c, g.phi_h, g.rho))


def sample_shape(samples, dataset: Dataset, request: ShapeRequest,
                 rng: np.random.Generator, b_zeta: float = 0.75,
                 b_delta: float = 0.75) -> list:
    """One latent-surface draw per posterior sample.

    ``samples`` must already be on the identifiable scale (the new sound is
    pinned to offset 0 and unit span, which presumes the data live in
    [0, 1] shared time). ``b_zeta``/``b_delta`` are the warp bounds the
    model was fitted with. Returns a list of ShapeDraw.
    """
    dataset = validate_dataset(dataset)
    if not samples:
        raise PredictionError("no posterior samples given")
    times = request.times()
    freqs = request.freq.values
    if times.size == 0 or freqs.size == 0:
        raise PredictionError("empty prediction grid")
    n_lat = times.size * freqs.size
    rt_a = np.repeat(times, freqs.size)
    h_a = np.tile(freqs, times.size)
    m_cond = request.m_cond
    draws = []
    seeds = rng.spawn(len(samples))
    for b, (sample, sub_rng) in enumerate(zip(samples, seeds)):
        g = sample.globals_
        if request.length <= g.gamma:
            raise PredictionError(
                f"requested length {request.length} does not exceed the "
                f"artifact period {g.gamma} of sample {b}")
        xi = draw_warp_effect(sample.hyper, b_zeta, b_delta, sub_rng)
        wt_a = np.repeat(shape_shared_times(request, xi), freqs.size)
        cov_aa = _cross_cov(g, wt_a, rt_a, h_a, wt_a, rt_a, h_a)
        if m_cond == 0:
            mean = np.zeros(n_lat)
            cov = cov_aa
        else:
            wt_y, rt_y, h_y, y, mu_y, tau2_y = _observed_arrays(dataset, sample)
            if y.size == 0:
                raise PredictionError("no observed points to condition on")
            cov_ay = _cross_cov(g, wt_a, rt_a, h_a, wt_y, rt_y, h_y)
            if m_cond is not None and m_cond < y.size:
                keep = np.zeros(y.size, dtype=bool)
                for row in range(n_lat):
                    top = np.argpartition(-cov_ay[row], m_cond)[:m_cond]
                    keep[top] = True
                idx = np.flatnonzero(keep)
            else:
                idx = np.arange(y.size)
            cov_yy = _cross_cov(g, wt_y[idx], rt_y[idx], h_y[idx],
                                wt_y[idx], rt_y[idx], h_y[idx])
            cov_yy[np.diag_indices_from(cov_yy)] += tau2_y[idx]
            mean, cov = conditional_mvn(np.zeros(n_lat), mu_y[idx], cov_aa,
                                        cov_ay[:, idx], cov_yy, y[idx],
                                        sigma2=g.sigma2)
        L = cholesky_with_jitter(0.5 * (cov + cov.T), g.sigma2)
        vec = mean + L @ sub_rng.standard_normal(n_lat)
        draws.append(ShapeDraw(sample_index=b, xi=xi,
                               values=vec.reshape(times.size, freqs.size)))
    return draws


def shape_summary(draws) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and (unbiased) variance across draws."""
    if len(draws) < 2:
        raise PredictionError("need at least 2 draws to summarize")
    stack = np.stack([d.values for d in draws])
    return stack.mean(axis=0), stack.var(axis=0, ddof=1)
