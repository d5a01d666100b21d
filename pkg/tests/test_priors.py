import math

import numpy as np
import pytest
import sympy

from warpgp import GlobalParams, ModelParams, WarpHyper
from warpgp.params import signal_params_from_tilde
from warpgp.priors import (
    PriorConfig,
    PriorError,
    ResolvedPriors,
    TruncatedInvGamma,
    TruncatedNormal,
    log_prior,
    sample_truncated,
)

from conftest import toy_dataset


def make_state(ds, zeta=0.1, gamma=0.05, phi_d=30.0, phi_c=900.0,
               phi_h=3.0, alpha=0.1, beta_tilde=0.9, tau2=1.0, sigma2=2.0,
               lam=0.4, rho=0.3, mu=0.0, delta=-0.2):
    g = GlobalParams(sigma2=sigma2, lam=lam, phi_d=phi_d, phi_c=phi_c,
                     phi_h=phi_h, rho=rho, gamma=gamma)
    sigs = tuple(signal_params_from_tilde(alpha, beta_tilde, zeta, delta,
                                          mu, tau2, s.length)
                 for s in ds.signals)
    return ModelParams(globals_=g, signals=sigs)


@pytest.fixture
def resolved():
    ds = toy_dataset(n_signals=2, bins=6, t_counts=(5, 7))
    return ds, ResolvedPriors.resolve(PriorConfig(), ds)


def test_reference_defaults():
    cfg = PriorConfig()
    assert (cfg.a_alpha, cfg.b_alpha) == (0.0, 0.2)
    assert (cfg.a_beta, cfg.b_beta) == (0.75, 1.0)
    assert (cfg.a_sigma, cfg.b_sigma) == (1.0, 1.0)
    assert (cfg.a_tau2, cfg.b_tau2) == (1.0, 1.0)
    assert (cfg.m_mu, cfg.v_mu) == (0.0, 1.0e5)
    assert (cfg.m0_zeta, cfg.v0_zeta, cfg.b_m) == (0.0, 0.75, 5.0)
    assert (cfg.a0_v, cfg.b0_v, cfg.b_v) == (0.01, 0.01, 0.75)
    assert (cfg.b_zeta, cfg.b_delta) == (0.75, 0.75)
    assert cfg.a_gamma == 0.02 and cfg.b_gamma is None


def test_resolution_from_data(resolved):
    ds, rp = resolved
    lengths = [s.length for s in ds.signals]
    assert rp.b_gamma == pytest.approx(2 * np.median(lengths))
    # default 26-bin grid: frequency-decay support (0.521, 13.025)
    full = toy_dataset(n_signals=1, bins=26, t_counts=(5,))
    rp26 = ResolvedPriors.resolve(PriorConfig(), full)
    assert rp26.phi_h_lo == pytest.approx(0.521, abs=5e-4)
    assert rp26.phi_h_hi == pytest.approx(13.025, abs=5e-4)


def test_conditional_decay_bounds(resolved):
    _, rp = resolved
    lo, hi = rp.phi_c_bounds(0.06)
    assert lo == pytest.approx(0.95 / (0.05 * 0.03))
    assert hi == pytest.approx(1900.0)
    beta_l = np.array([0.9, 0.8])
    lo_d, hi_d = rp.phi_d_bounds(beta_l)
    assert lo_d == pytest.approx(0.95 / (0.05 * 0.9))
    steps = beta_l / (np.array(rp.time_counts) - 1.0)
    assert hi_d == pytest.approx(0.95 / (0.05 * steps.min()))


def test_out_of_support_is_minus_inf(resolved):
    ds, rp = resolved
    hyper = WarpHyper(0.0, 0.1, 0.0, 0.1)
    base = make_state(ds)
    assert math.isfinite(log_prior(base, hyper, rp))
    bad_states = [
        make_state(ds, zeta=0.76),              # warp outside its bound
        make_state(ds, alpha=0.25),             # offset above b_alpha
        make_state(ds, beta_tilde=0.6),         # rate below a_beta
        make_state(ds, gamma=0.01),             # period below a_gamma
        make_state(ds, gamma=rp.b_gamma + 0.1),
        make_state(ds, phi_h=0.1),              # decay outside its support
        make_state(ds, phi_c=100.0),            # below the conditional bound
        make_state(ds, phi_d=1.0),
    ]
    for st in bad_states:
        assert log_prior(st, hyper, rp) == -math.inf
    assert log_prior(base, WarpHyper(5.5, 0.1, 0.0, 0.1), rp) == -math.inf
    assert log_prior(base, WarpHyper(0.0, 0.9, 0.0, 0.1), rp) == -math.inf


def test_warp_random_effect_density(resolved):
    """The warp-term difference must equal the Gaussian on the log-odds
    scale plus the transform Jacobian, with the Jacobian checked against
    symbolic differentiation."""
    ds, rp = resolved
    hyper = WarpHyper(0.3, 0.2, 0.0, 0.1)
    b = rp.config.b_zeta
    x = sympy.Symbol("x")
    z_expr = sympy.log((x + b) / (b - x))
    jac = sympy.lambdify(x, sympy.diff(z_expr, x))

    def zeta_term(zeta):
        z = math.log((zeta + b) / (b - zeta))
        dens = -0.5 * (math.log(2 * math.pi * hyper.v_zeta)
                       + (z - hyper.m_zeta) ** 2 / hyper.v_zeta)
        return dens + math.log(jac(zeta))

    for z1, z2 in [(0.0, 0.3), (-0.5, 0.2), (0.6, -0.6)]:
        d_full = (log_prior(make_state(ds, zeta=z1), hyper, rp)
                  - log_prior(make_state(ds, zeta=z2), hyper, rp))
        # two signals share the zeta value, so the term enters twice
        d_term = 2 * (zeta_term(z1) - zeta_term(z2))
        assert d_full == pytest.approx(d_term, abs=1e-10)
    # at zeta = 0 the Jacobian is 2b/(b^2 - 0) = 2/b
    assert jac(0.0) == pytest.approx(2.0 * b / (b * b))


def test_gamma_move_changes_circular_decay_normalization(resolved):
    # the conditional uniform on the circular decay is normalized, so its
    # density changes when only the period moves
    ds, rp = resolved
    hyper = WarpHyper(0.0, 0.1, 0.0, 0.1)
    lp1 = log_prior(make_state(ds, gamma=0.05), hyper, rp)
    lp2 = log_prior(make_state(ds, gamma=0.06), hyper, rp)
    lo1, hi = rp.phi_c_bounds(0.05)
    lo2, _ = rp.phi_c_bounds(0.06)
    assert lp2 - lp1 == pytest.approx(math.log(hi - lo1) - math.log(hi - lo2),
                                      abs=1e-10)


def test_truncated_normal_sampling(rng):
    dist = TruncatedNormal(mean=0.0, var=0.75, lower=-5.0, upper=5.0)
    x = sample_truncated(dist, rng, size=1_000_000)
    assert np.all((x > -5) & (x < 5))
    tight = TruncatedNormal(mean=1.0, var=4.0, lower=0.0, upper=2.0)
    x = sample_truncated(tight, rng, size=1_000_000)
    assert np.all((x > 0) & (x < 2))
    # closed-form truncated-normal mean
    from scipy.stats import norm
    a = (tight.lower - tight.mean) / 2.0
    b = (tight.upper - tight.mean) / 2.0
    m = tight.mean + 2.0 * (norm.pdf(a) - norm.pdf(b)) / (norm.cdf(b) - norm.cdf(a))
    assert np.mean(x) == pytest.approx(m, rel=0.01)


def test_truncated_invgamma_sampling(rng):
    dist = TruncatedInvGamma(shape=0.01, rate=0.01, upper=0.75)
    x = sample_truncated(dist, rng, size=1_000_000)
    assert np.all((x > 0) & (x < 0.75))
    with pytest.raises(PriorError):
        sample_truncated(TruncatedNormal(0.0, 1e-8, 50.0, 51.0), rng)


def test_config_validation():
    with pytest.raises(PriorError):
        PriorConfig(a_beta=0.9, b_beta=0.8)
    with pytest.raises(PriorError):
        PriorConfig(a_alpha=0.5, b_alpha=0.2)
