import numpy as np
import pytest

from warpgp import GlobalParams, WarpHyper
from warpgp.grids import FrequencyGrid
from warpgp.mcmc import PosteriorSample, remap_identifiable
from warpgp.prediction import (
    PredictionError,
    ShapeDraw,
    ShapeRequest,
    conditional_mvn,
    draw_warp_effect,
    sample_shape,
    shape_shared_times,
    shape_summary,
)
from warpgp.warping import WarpParams

from conftest import APPENDIX_GLOBALS, toy_dataset


def random_joint(rng, na, ny):
    n = na + ny
    A = rng.normal(size=(n, n + 2))
    cov = A @ A.T / (n + 2)
    mu = rng.normal(size=n)
    return mu, cov


def test_conditional_independence():
    rng = np.random.default_rng(1)
    mu, cov = random_joint(rng, 3, 4)
    cov = cov.copy()
    cov[:3, 3:] = 0.0
    cov[3:, :3] = 0.0
    y = rng.normal(size=4)
    mean, cc = conditional_mvn(mu[:3], mu[3:], cov[:3, :3], cov[:3, 3:],
                               cov[3:, 3:], y)
    assert np.allclose(mean, mu[:3], atol=1e-12)
    assert np.allclose(cc, cov[:3, :3], atol=1e-12)


def test_conditional_bivariate_closed_form():
    # scalar case: mean = mu_a + r*(sa/sy)*(y - mu_y), var = sa^2*(1 - r^2)
    mu_a, mu_y, sa, sy, r, y = 1.0, -2.0, 1.5, 0.7, 0.6, -1.1
    cov_aa = np.array([[sa * sa]])
    cov_ay = np.array([[r * sa * sy]])
    cov_yy = np.array([[sy * sy]])
    mean, cc = conditional_mvn(np.array([mu_a]), np.array([mu_y]), cov_aa,
                               cov_ay, cov_yy, np.array([y]))
    assert mean[0] == pytest.approx(mu_a + r * sa / sy * (y - mu_y), rel=1e-12)
    assert cc[0, 0] == pytest.approx(sa * sa * (1 - r * r), rel=1e-12)


def test_conditional_matches_monte_carlo_regression():
    rng = np.random.default_rng(7)
    mu, cov = random_joint(rng, 5, 8)
    L = np.linalg.cholesky(cov)
    draws = mu + (L @ rng.standard_normal((13, 1_000_000))).T
    a, yv = draws[:, :5], draws[:, 5:]
    # condition by regression on the simulated joint
    ym = yv.mean(axis=0)
    yc = yv - ym
    ac = a - a.mean(axis=0)
    B = np.linalg.solve(yc.T @ yc, yc.T @ ac).T
    y_star = rng.normal(size=8)
    mc_mean = a.mean(axis=0) + B @ (y_star - ym)
    mc_cov = (ac - yc @ B.T).T @ (ac - yc @ B.T) / len(a)
    mean, cc = conditional_mvn(mu[:5], mu[5:], cov[:5, :5], cov[:5, 5:],
                               cov[5:, 5:], y_star)
    assert np.allclose(mean, mc_mean, atol=2e-2)
    assert np.allclose(cc, mc_cov, atol=2e-2)


def test_conditional_cov_psd_random(rng):
    for _ in range(50):
        na, ny = int(rng.integers(1, 6)), int(rng.integers(1, 8))
        mu, cov = random_joint(rng, na, ny)
        _, cc = conditional_mvn(mu[:na], mu[na:], cov[:na, :na],
                                cov[:na, na:], cov[na:, na:],
                                rng.normal(size=ny))
        w = np.linalg.eigvalsh(0.5 * (cc + cc.T))
        assert w.min() >= -1e-8 * max(np.trace(cc), 1.0)
        # conditioning never inflates pointwise variance
        assert np.all(np.diag(cc) <= np.diag(cov[:na, :na]) + 1e-10)


def _one_sample(n_signals, lengths, gamma=0.06, v=0.05):
    return PosteriorSample(
        iteration=0, globals_=GlobalParams(sigma2=10.0, lam=0.5, phi_d=206.0,
                                           phi_c=766.0, phi_h=0.69, rho=0.85,
                                           gamma=gamma),
        hyper=WarpHyper(0.2, v, -0.1, v),
        alpha=(0.0,) * n_signals, beta_tilde=(1.0,) * n_signals,
        zeta=(0.1,) * n_signals, delta=(0.1,) * n_signals,
        mu=(0.0,) * n_signals, tau2=(1.0,) * n_signals,
        permutation=tuple(range(1, n_signals + 1)), lengths=tuple(lengths))


def test_grid_endpoints_hit_unit_interval(rng):
    req = ShapeRequest(length=0.08, step=0.01, freq=FrequencyGrid.default(4))
    for _ in range(10):
        xi = WarpParams(rng.uniform(-1, 1), rng.uniform(-1, 1))
        st = shape_shared_times(req, xi)
        assert st[0] == 0.0 and st[-1] == 1.0
        assert np.all(np.diff(st) > 0)


def test_prior_fallback_without_conditioning():
    ds = toy_dataset(n_signals=2, bins=4, t_counts=(5, 5), seed=2)
    sample = _one_sample(2, [s.length for s in ds.signals])
    req = ShapeRequest(length=0.07, step=0.01, freq=ds.freq, m_cond=0)
    draws = sample_shape([sample] * 400, ds, req, np.random.default_rng(3))
    stack = np.stack([d.values for d in draws])
    # zero-mean prior with pointwise variance sigma2
    se_mean = np.sqrt(10.0 / len(draws))
    assert np.abs(stack.mean(axis=0)).max() < 4 * se_mean
    vr = stack.var(axis=0, ddof=1)
    se_var = 10.0 * np.sqrt(2.0 / (len(draws) - 1))
    assert np.abs(vr - 10.0).max() < 4 * se_var


def test_desk_scale_matches_exact_conditional():
    # frozen parameters, conditioning on everything: the pointwise mean and
    # variance across draws must match the exact Gaussian conditional
    ds = toy_dataset(n_signals=2, bins=4, t_counts=(5, 5), seed=4)
    sample = _one_sample(2, [s.length for s in ds.signals], v=1e-18)
    req = ShapeRequest(length=0.07, step=0.02, freq=FrequencyGrid.default(4),
                       m_cond=None)
    n_draws = 1500
    draws = sample_shape([sample] * n_draws, ds, req,
                         np.random.default_rng(5))
    mean, var = shape_summary(draws)

    # oracle: single conditional via the same public op on the full blocks
    from warpgp.prediction import _cross_cov, _observed_arrays
    g = sample.globals_
    xi = draw_warp_effect(sample.hyper, 0.75, 0.75, np.random.default_rng(99))
    times = req.times()
    wt_a = np.repeat(shape_shared_times(req, xi), 4)
    rt_a = np.repeat(times, 4)
    h_a = np.tile(req.freq.values, times.size)
    wt_y, rt_y, h_y, y, mu_y, tau2_y = _observed_arrays(ds, sample)
    cov_aa = _cross_cov(g, wt_a, rt_a, h_a, wt_a, rt_a, h_a)
    cov_ay = _cross_cov(g, wt_a, rt_a, h_a, wt_y, rt_y, h_y)
    cov_yy = _cross_cov(g, wt_y, rt_y, h_y, wt_y, rt_y, h_y)
    cov_yy[np.diag_indices_from(cov_yy)] += tau2_y
    em, ec = conditional_mvn(np.zeros(wt_a.size), mu_y, cov_aa, cov_ay,
                             cov_yy, y)
    em = em.reshape(times.size, 4)
    ev = np.diag(ec).reshape(times.size, 4)
    sd = np.sqrt(ev)
    se_mean = sd / np.sqrt(n_draws)
    se_var = ev * np.sqrt(2.0 / (n_draws - 1))
    assert np.all(np.abs(mean - em) <= 4 * se_mean)
    assert np.all(np.abs(var - ev) <= 4 * se_var)


def test_sample_shape_rejects_short_grid():
    ds = toy_dataset(n_signals=1, bins=4, t_counts=(5,), seed=2)
    sample = _one_sample(1, [ds.signals[0].length], gamma=0.09)
    req = ShapeRequest(length=0.04, step=0.01, freq=ds.freq)
    with pytest.raises(PredictionError, match="period"):
        sample_shape([sample], ds, req, np.random.default_rng(0))


def test_shape_summary():
    a = ShapeDraw(0, WarpParams(), np.full((2, 2), 1.0))
    b = ShapeDraw(1, WarpParams(), np.full((2, 2), 3.0))
    mean, var = shape_summary([a, b])
    assert np.allclose(mean, 2.0)
    assert np.allclose(var, 2.0)  # unbiased: ((1-2)^2+(3-2)^2)/(2-1)
    mean, var = shape_summary([a, a, a])
    assert np.allclose(var, 0.0)
    with pytest.raises(PredictionError):
        shape_summary([a])


def test_shape_summary_matches_two_pass_oracle(rng):
    draws = [ShapeDraw(i, WarpParams(), rng.normal(size=(3, 4)))
             for i in range(1000)]
    mean, var = shape_summary(draws)
    stack = np.stack([d.values for d in draws])
    m2 = np.zeros((3, 4))
    m1 = stack.sum(axis=0) / 1000
    for d in draws:
        m2 += (d.values - m1) ** 2
    assert np.allclose(mean, m1, atol=1e-12)
    assert np.allclose(var, m2 / 999, atol=1e-12)


def test_warp_effect_law(rng):
    hyper = WarpHyper(0.7, 0.3, 0.7, 0.3)
    draws = np.array([draw_warp_effect(hyper, 1.5, 1.5, rng).zeta
                      for _ in range(4000)])
    assert np.all(np.abs(draws) < 1.5)
    # median of b*tanh(z/2) at z ~ N(0.7, .) is b*tanh(0.35)
    assert np.median(draws) == pytest.approx(1.5 * np.tanh(0.35), abs=0.03)
