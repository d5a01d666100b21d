import numpy as np
import pytest

from warpgp import GlobalParams
from warpgp.mcmc import PosteriorSample, flatten_sample
from warpgp.simulate import (
    FIXTURE_SIGNALS,
    CoverageReport,
    SimConfig,
    SimError,
    TruthRecord,
    generate,
    score_coverage,
)

from conftest import APPENDIX_GLOBALS


def test_defaults_follow_reference_study():
    cfg = SimConfig()
    assert cfg.n_signals == 15 and cfg.freq_bins == 26
    assert (cfg.t_min, cfg.t_max, cfg.time_step) == (10, 25, 0.01)
    g = cfg.globals_
    assert (g.sigma2, g.lam, g.gamma, g.rho) == (10.0, 0.5, 0.06, 0.85)
    assert (g.phi_d, g.phi_h, g.phi_c) == (206.0, 0.69, 766.0)
    assert (cfg.b_zeta, cfg.b_delta) == (1.5, 1.5)
    assert (cfg.m_zeta, cfg.v_zeta) == (0.7, 0.3)


def test_fixture_rows_are_used_exactly():
    cfg = SimConfig(n_signals=8, freq_bins=5)
    ds, truth = generate(cfg, np.random.default_rng(1))
    assert ds.n_signals == 8
    for i in range(8):
        row = FIXTURE_SIGNALS[i]
        assert truth.alpha[i] == row[0]
        assert truth.beta_tilde[i] == row[1]
        assert truth.zeta[i] == row[2]
        assert truth.delta[i] == row[3]
        assert truth.mu[i] == row[4]
        assert truth.tau2[i] == row[5]
    # first signal anchors the identifiable scale
    assert truth.alpha[0] == 0.0 and truth.beta_tilde[0] == 1.0
    for T in [s.time.count for s in ds.signals]:
        assert 10 <= T <= 25


def test_seed_determinism():
    cfg = SimConfig(n_signals=3, freq_bins=4)
    d1, t1 = generate(cfg, np.random.default_rng(7))
    d2, t2 = generate(cfg, np.random.default_rng(7))
    assert t1 == t2
    for a, b in zip(d1.signals, d2.signals):
        assert np.array_equal(a.values, b.values)


def test_degenerate_noise_limit():
    rows = ((0.0, 1.0, 0.0, 0.0, 4.5, 1e-14), (0.1, 0.9, 0.0, 0.0, -2.0, 1e-14))
    tiny = GlobalParams(sigma2=1e-14, lam=0.5, phi_d=206.0, phi_c=766.0,
                        phi_h=0.69, rho=0.85, gamma=0.06)
    cfg = SimConfig(n_signals=2, freq_bins=4, globals_=tiny, rows=rows)
    ds, truth = generate(cfg, np.random.default_rng(0))
    assert np.allclose(ds.signals[0].values, 4.5, atol=1e-5)
    assert np.allclose(ds.signals[1].values, -2.0, atol=1e-5)


def test_sample_covariance_matches_analytic():
    # one tiny signal drawn repeatedly: the empirical covariance of the
    # four points must match the construction covariance entrywise
    rows = ((0.0, 1.0, 0.3, -0.2, 1.0, 0.8),)
    cfg = SimConfig(n_signals=1, freq_bins=2, t_min=2, t_max=2, rows=rows)
    reps = 10_000
    rng = np.random.default_rng(3)
    draws = np.empty((reps, 4))
    first = None
    for r in range(reps):
        ds, _ = generate(cfg, rng)
        draws[r] = ds.signals[0].values.ravel()
        if first is None:
            from warpgp import LatticePoint, build_cov_matrix
            from warpgp.warping import SyncParams, WarpParams, beta_from_tilde
            from warpgp.covariance import NuisanceParams
            l = ds.signals[0].length
            pts = [LatticePoint(1, j + 1, k + 1, j * 0.01,
                                float(ds.signals[0].freq.values[k]))
                   for j in range(2) for k in range(2)]
            sync = {1: SyncParams(0.0, beta_from_tilde(1.0, 0.0, l),
                                  WarpParams(0.3, -0.2))}
            nuis = {1: NuisanceParams(1.0, 0.8)}
            first = build_cov_matrix(pts, cfg.globals_, sync, {1: l}, nuis)
    emp = np.cov(draws.T)
    se = np.sqrt((np.outer(np.diag(first), np.diag(first)) + first ** 2) / reps)
    assert np.all(np.abs(emp - first) < 3.5 * se)


def test_point_cap():
    cfg = SimConfig(n_signals=15, freq_bins=26, t_min=25, t_max=25)
    assert 15 * 25 * 26 <= 20_000  # the reference config fits the cap
    big = SimConfig(n_signals=15, freq_bins=26, t_min=25, t_max=25,
                    time_step=0.01)
    # force a violation through a larger grid
    with pytest.raises(SimError):
        generate(SimConfig(n_signals=15, freq_bins=60, t_min=25, t_max=25),
                 np.random.default_rng(0))


def test_truth_record_completeness():
    cfg = SimConfig(n_signals=15, freq_bins=4)
    _, truth = generate(cfg, np.random.default_rng(5))
    named = truth.named()
    # the reference study scores 6 per signal plus 7 global parameters
    assert len(named) == 15 * 6 + 7
    sample_names = set(flatten_sample(truth.as_sample()))
    assert set(named) == sample_names - {"m_zeta", "v_zeta", "m_delta",
                                         "v_delta"}


def _chain_around(truth, spread, n=200, offset=0.0):
    rng = np.random.default_rng(0)
    base = truth.as_sample()
    out = []
    for it in range(n):
        jitter = {
            name: tuple(np.asarray(getattr(base, name))
                        + offset + spread * rng.normal(size=len(base.alpha)))
            for name in ("zeta", "delta", "mu")
        }
        out.append(PosteriorSample(
            iteration=it, globals_=base.globals_, hyper=base.hyper,
            alpha=base.alpha, beta_tilde=base.beta_tilde,
            zeta=jitter["zeta"], delta=jitter["delta"], mu=jitter["mu"],
            tau2=base.tau2, permutation=base.permutation,
            lengths=base.lengths))
    return out


def test_score_coverage_basics():
    cfg = SimConfig(n_signals=2, freq_bins=4)
    _, truth = generate(cfg, np.random.default_rng(2))
    centered = _chain_around(truth, spread=0.01)
    rep = score_coverage(centered, truth)
    assert rep.n_scored == 2 * 6 + 7
    assert rep.n_covered == rep.n_scored  # truth at the center is covered
    shifted = _chain_around(truth, spread=1e-6, offset=0.5)
    rep2 = score_coverage(shifted, truth)
    bad = {name for name, *_rest, cov in rep2.rows if not cov}
    # every jittered-and-shifted parameter misses; the untouched ones hit
    assert {n for n in bad if n.startswith(("zeta", "delta", "mu"))} == bad
    assert len(bad) == 3 * 2
    assert "covered" in rep2.table()
