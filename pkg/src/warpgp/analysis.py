"""Cross-species comparison and predictive scoring.

The representative spectrograms are compared with a mean-squared distance
on a shared grid, summarized into an average-linkage (UPGMA) tree, and the
model variants are scored by the continuous ranked probability score on a
random holdout of lattice points.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .covariance import circ_dist, _gneiting
from .grids import Dataset, DatasetError, Spectrogram, validate_dataset
from .mcmc import FitConfig, VARIANTS, default_init, mcmc_run, remap_identifiable
from .nngp import NngpConfig
from .params import WarpHyper
from .prediction import _observed_arrays
from .priors import PriorConfig, ResolvedPriors

__all__ = [
    "AnalysisError",
    "DistanceMatrix",
    "HoldoutPlan",
    "quadratic_distance",
    "upgma_tree",
    "make_holdout",
    "crps_empirical",
    "CrossvalConfig",
    "crossval_score",
]

logger = logging.getLogger(__name__)


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n = len(self.labels)
        if vals.shape != (n, n):
            raise AnalysisError("distance matrix shape does not match labels")
        if not np.allclose(vals, vals.T, atol=1e-12):
            raise AnalysisError("distance matrix must be symmetric")
        if not np.allclose(np.diag(vals), 0.0, atol=1e-12):
            raise AnalysisError("distance matrix must have a zero diagonal")
        if (vals < -1e-12).any():
            raise AnalysisError("distances must be nonnegative")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", vals)


def quadratic_distance(mean_a: np.ndarray, mean_b: np.ndarray,
                       grid_a=None, grid_b=None) -> float:
    """Mean over grid points of the squared intensity difference.

    Both shapes must be evaluated on the same grid; when the (times, freqs)
    grids are supplied they are checked for exact agreement.
    """
    a = np.asarray(mean_a, dtype=float)
    b = np.asarray(mean_b, dtype=float)
    if a.shape != b.shape:
        raise AnalysisError(f"grid mismatch: {a.shape} vs {b.shape}")
    if grid_a is not None or grid_b is not None:
        ta, ha = grid_a
        tb, hb = grid_b
        if not (np.array_equal(ta, tb) and np.array_equal(ha, hb)):
            raise AnalysisError("grid mismatch: coordinates differ")
    return float(np.mean((a - b) ** 2))


def upgma_tree(d: DistanceMatrix) -> str:
    """Average-linkage agglomeration rendered as a Newick string.

    Cluster heights are half the merge distance, so branch lengths are
    ultrametric; merge ties are resolved toward the smallest member
    indices, which makes the output deterministic.
    """
    n = len(d.labels)
    if n < 2:
        raise AnalysisError("need at least 2 labels for a tree")
    # active clusters: id -> (newick, height, members)
    clusters = {i: (str(d.labels[i]), 0.0, frozenset([i])) for i in range(n)}
    dist = {(i, j): float(d.values[i, j]) for i in range(n) for j in range(i)}

    def pair_dist(a, b):
        key = (max(a, b), min(a, b))
        return dist[key]

    next_id = n
    while len(clusters) > 1:
        ids = sorted(clusters)
        best = None
        for x in range(1, len(ids)):
            for y in range(x):
                cand = (pair_dist(ids[x], ids[y]), ids[y], ids[x])
                if best is None or cand < best:
                    best = cand
        dmin, a, b = best
        na, ha, ma = clusters.pop(a)
        nb, hb, mb = clusters.pop(b)
        height = dmin / 2.0
        newick = f"({na}:{height - ha:.10g},{nb}:{height - hb:.10g})"
        members = ma | mb
        for c in list(clusters):
            # unweighted average over original leaf pairs
            mc = clusters[c][2]
            da = pair_dist(a, c)
            db = pair_dist(b, c)
            new = (da * len(ma) + db * len(mb)) / (len(ma) + len(mb))
            dist[(max(next_id, c), min(next_id, c))] = new
        clusters[next_id] = (newick, height, members)
        next_id += 1
    (newick, _, _), = clusters.values()
    return newick + ";"


@dataclass(frozen=True)
class HoldoutPlan:
    """Masked (time, frequency) pairs per signal, 1-based, plus provenance."""

    masked: tuple            # tuple per signal of ((j, k), ...) pairs
    fraction: float
    seed: int


def make_holdout(dataset: Dataset, fraction: float, seed: int
                 ) -> tuple[Dataset, HoldoutPlan]:
    """Randomly mask a fraction of the active lattice points.

    Exactly round(fraction * n) points are drawn without replacement across
    the whole dataset; the train dataset carries them as masks so every
    index map and likelihood term shrinks consistently. Errors out if a
    signal would lose all its points.
    """
    dataset = validate_dataset(dataset)
    if not (0.0 < fraction < 1.0):
        raise AnalysisError(f"fraction must be in (0, 1), got {fraction}")
    n = dataset.n
    n_mask = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=n_mask, replace=False))
    # map global active indices to (signal, time, freq)
    bounds = np.cumsum([0] + [s.n_active for s in dataset.signals])
    masked_per_signal = [[] for _ in dataset.signals]
    new_signals = []
    for i, spec in enumerate(dataset.signals):
        local = chosen[(chosen >= bounds[i]) & (chosen < bounds[i + 1])] - bounds[i]
        base = spec.mask if spec.mask is not None else np.ones(spec.values.shape, bool)
        active_flat = np.flatnonzero(base.ravel())
        kill = active_flat[local]
        mask = base.copy()
        mask.ravel()[kill] = False
        if not mask.any():
            raise AnalysisError(f"holdout would empty signal {spec.id}")
        H = len(spec.freq)
        masked_per_signal[i] = tuple(
            (int(f) // H + 1, int(f) % H + 1) for f in kill)
        new_signals.append(replace(spec, mask=mask) if local.size
                           else spec)
    plan = HoldoutPlan(masked=tuple(tuple(m) for m in masked_per_signal),
                       fraction=fraction, seed=seed)
    train = Dataset(signals=tuple(new_signals),
                    species_label=dataset.species_label)
    return validate_dataset(train), plan


def crps_empirical(samples, y: float) -> float:
    """Empirical CRPS: mean|X - y| - 0.5 * mean|X - X'| over all ordered
    pairs (self-pairs included), computed exactly in O(m log m)."""
    x = np.asarray(samples, dtype=float).ravel()
    m = x.size
    if m < 2:
        raise AnalysisError("need at least 2 predictive samples")
    term1 = float(np.mean(np.abs(x - y)))
    xs = np.sort(x)
    ranks = np.arange(1, m + 1)
    pair_sum = 2.0 * float(np.sum((2.0 * ranks - m - 1) * xs))
    return term1 - 0.5 * pair_sum / (m * m)


@dataclass(frozen=True)
class CrossvalConfig:
    fraction: float = 0.05
    seed: int = 0
    n_iter: int = 2000
    burn_in: int = 400
    thin: int = 4
    k: int = 10
    priors: PriorConfig = PriorConfig()
    backend: str | None = None


def _variant_setup(variant: str, dataset: Dataset, priors: ResolvedPriors):
    if variant not in VARIANTS:
        raise AnalysisError(f"unknown variant {variant!r}; "
                            f"pick one of {sorted(VARIANTS)}")
    frozen, pins = VARIANTS[variant]
    params, hyper, perm = default_init(dataset, priors)
    sigs = list(params.signals)
    for i, sp in enumerate(sigs):
        sync = sp.sync
        if "zeta" in pins:
            sync = replace(sync, warp=replace(sync.warp, zeta=pins["zeta"],
                                              delta=pins["delta"]))
        if "alpha" in pins:
            from .warping import beta_from_tilde
            sync = replace(sync, alpha=pins["alpha"],
                           beta=beta_from_tilde(pins["beta_tilde"],
                                                pins["alpha"],
                                                priors.lengths[i]))
        sigs[i] = replace(sp, sync=sync)
    params = replace(params, signals=tuple(sigs))
    if "lam" in pins:
        params = replace(params, globals_=replace(params.globals_,
                                                  lam=pins["lam"]))
    return frozen, (params, hyper, perm)


def predictive_draws(train: Dataset, plan: HoldoutPlan, full: Dataset,
                     samples, k: int, rng: np.random.Generator):
    """Per masked point: one predictive draw per posterior sample.

    Each draw conditions on the 4k retained observations with the highest
    process covariance to the masked point (nugget included), mirroring the
    fit-time approximation. Yields (y_true, draws_array) pairs.
    """
    out = []
    cache = {}
    for i, spec in enumerate(full.signals):
        for (j, kf) in plan.masked[i]:
            y_true = float(spec.values[j - 1, kf - 1])
            draws = np.empty(len(samples))
            for b, sample in enumerate(samples):
                g = sample.globals_
                if b not in cache:
                    cache[b] = _observed_arrays(train, sample)
                wt_y, rt_y, h_y, yv, mu_y, tau2_y = cache[b]
                params = sample.to_model_params()
                sync = params.signals[i].sync
                l = train.signals[i].length
                t = (j - 1) * spec.time.step
                from .warping import warp as _warp
                wt_p = sync.alpha + sync.beta * _warp(min(t / l, 1.0), sync.warp) * l
                h_p = spec.freq.values[kf - 1]
                dd = np.abs(wt_p - wt_y)
                dtc = circ_dist(np.abs(t - rt_y), g.gamma)
                dh = np.abs(h_p - h_y)
                cov_py = g.sigma2 * (
                    g.lam * _gneiting(dd, dh, g.phi_d, g.phi_h, g.rho)
                    + (1 - g.lam) * _gneiting(dtc, dh, g.phi_c, g.phi_h, g.rho))
                m = min(4 * k, cov_py.size)
                idx = np.argpartition(-cov_py, m - 1)[:m]
                cov_yy = g.sigma2 * (
                    g.lam * _gneiting(np.abs(wt_y[idx, None] - wt_y[None, idx]),
                                      np.abs(h_y[idx, None] - h_y[None, idx]),
                                      g.phi_d, g.phi_h, g.rho)
                    + (1 - g.lam) * _gneiting(
                        circ_dist(np.abs(rt_y[idx, None] - rt_y[None, idx]), g.gamma),
                        np.abs(h_y[idx, None] - h_y[None, idx]),
                        g.phi_c, g.phi_h, g.rho))
                cov_yy[np.diag_indices_from(cov_yy)] += tau2_y[idx]
                from .covariance import cholesky_with_jitter
                from scipy.linalg import solve_triangular
                L = cholesky_with_jitter(cov_yy, g.sigma2)
                w = solve_triangular(L, yv[idx] - mu_y[idx], lower=True,
                                     check_finite=False)
                v = solve_triangular(L, cov_py[idx], lower=True,
                                     check_finite=False)
                mu_i = params.signals[i].nuis.mu
                tau2_i = params.signals[i].nuis.tau2
                mean = mu_i + v @ w
                var = g.sigma2 + tau2_i - v @ v
                draws[b] = mean + math.sqrt(max(var, 1e-12)) * rng.normal()
            out.append((y_true, draws))
    return out


def crossval_score(dataset: Dataset, variant: str, config: CrossvalConfig,
                   rng: np.random.Generator) -> float:
    """Mean CRPS of one model variant on a random holdout.

    Fits the variant on the retained points, then scores the posterior
    predictive (Gaussian given the nearest retained observations, nugget
    included, one draw per posterior sample) at every masked point.
    """
    dataset = validate_dataset(dataset)
    train, plan = make_holdout(dataset, config.fraction, config.seed)
    priors = ResolvedPriors.resolve(config.priors, train)
    frozen, init = _variant_setup(variant, train, priors)
    fit_cfg = FitConfig(priors=config.priors, nngp=NngpConfig(k=config.k),
                        frozen=frozen, backend=config.backend)
    samples = mcmc_run(train, fit_cfg, init, rng, config.n_iter,
                       config.burn_in, config.thin)
    samples = [remap_identifiable(s) for s in samples]
    scored = predictive_draws(train, plan, dataset, samples, config.k, rng)
    if not scored:
        raise AnalysisError("holdout masked no points; increase the fraction")
    crps = [crps_empirical(draws, y) for y, draws in scored]
    logger.info("crossval %s: %d masked points, mean CRPS %.4f",
                variant, len(crps), float(np.mean(crps)))
    return float(np.mean(crps))
