"""Adaptive Metropolis-within-Gibbs over all model parameters.

One sweep updates every global kernel parameter, four blocks per signal
(level, nugget, offset/rate, warp pair), the four warp hyper-parameters,
and proposes one transposition of the signal ordering. Scalar blocks move
on unconstrained transforms (log for positive, log-odds for bounded) with
Robbins-Monro step adaptation toward 0.44 acceptance during burn-in; step
sizes freeze afterwards. Every acceptance decision combines the
neighbor-factorized log-likelihood with the joint log prior.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._core import PointLayout
from ._core.state import LikelihoodState
from .covariance import GlobalParams, NuisanceParams, SignalParams
from .grids import Dataset, validate_dataset
from .nngp import NngpConfig, Permutation, permute_proposal
from .params import ModelParams, WarpHyper
from .priors import PriorConfig, ResolvedPriors, log_prior
from .warping import SyncParams, WarpParams, beta_from_tilde, synchronize

__all__ = [
    "FitConfig",
    "PosteriorSample",
    "McmcError",
    "VARIANTS",
    "default_init",
    "mcmc_run",
    "remap_identifiable",
    "flatten_sample",
    "write_chain",
    "read_chain",
    "summarize_samples",
    "write_summary",
]


class McmcError(RuntimeError):
    """Non-finite starting state or an unrecoverable numerical failure."""


#: model variants: blocks held fixed and the values they are pinned to
VARIANTS = {
    "full": (frozenset(), {}),
    "no-warp": (frozenset({"warp", "hyper"}), {"zeta": 0.0, "delta": 0.0}),
    "no-circ": (frozenset({"lambda", "gamma", "phi_c"}), {"lam": 1.0}),
    "no-align": (frozenset({"align"}), {"alpha": 0.0, "beta_tilde": 1.0}),
}


@dataclass(frozen=True)
class FitConfig:
    priors: PriorConfig = PriorConfig()
    nngp: NngpConfig = NngpConfig()
    frozen: frozenset = frozenset()
    backend: str | None = None
    n_threads: int | None = None
    stream_path: str | None = None
    stream_every: int = 100
    target_accept: float = 0.44
    adapt_c0: float = 1.0
    adapt_kappa: float = 0.6


@dataclass(frozen=True)
class PosteriorSample:
    """Snapshot of every parameter at one retained iteration."""

    iteration: int
    globals_: GlobalParams
    hyper: WarpHyper
    alpha: tuple
    beta_tilde: tuple
    zeta: tuple
    delta: tuple
    mu: tuple
    tau2: tuple
    permutation: tuple  # 1-based signal ids
    lengths: tuple

    def to_model_params(self) -> ModelParams:
        sigs = []
        for i in range(len(self.alpha)):
            beta = beta_from_tilde(self.beta_tilde[i], self.alpha[i], self.lengths[i])
            sigs.append(SignalParams(
                sync=SyncParams(alpha=self.alpha[i], beta=beta,
                                warp=WarpParams(self.zeta[i], self.delta[i])),
                nuis=NuisanceParams(mu=self.mu[i], tau2=self.tau2[i]),
            ))
        return ModelParams(globals_=self.globals_, signals=tuple(sigs))


def remap_identifiable(sample: PosteriorSample) -> PosteriorSample:
    """Rescale one posterior sample onto the identifiable shared-time scale.

    The smallest offset moves to 0 and the largest synchronized endpoint to
    1, with the shared-time decay rescaled the opposite way, which leaves
    every covariance value unchanged. Idempotent.
    """
    alpha = np.asarray(sample.alpha)
    lengths = np.asarray(sample.lengths)
    # inputs need not be identifiable, so the normalized rate may sit
    # outside its prior box here; invert the rate map without range checks
    beta = np.asarray(sample.beta_tilde) * (1.0 - alpha) / lengths
    ends = alpha + beta * lengths
    a_min = float(alpha.min())
    l_max = float(ends.max() - a_min)
    alpha_star = (alpha - a_min) / l_max
    beta_star = beta / l_max
    # the largest synchronized endpoint maps to exactly 1, so the
    # normalized rate is mathematically <= 1; clip the rounding overshoot
    bt_star = np.minimum(beta_star * lengths / (1.0 - alpha_star), 1.0)
    return replace(
        sample,
        globals_=replace(sample.globals_, phi_d=sample.globals_.phi_d * l_max),
        alpha=tuple(alpha_star),
        beta_tilde=tuple(bt_star),
    )


# ---------------------------------------------------------------------------
# transforms between constrained parameters and the proposal scale

class _Log:
    def fwd(self, x):
        return math.log(x)

    def inv(self, u):
        return math.exp(u)

    def ljd(self, x):
        return math.log(x)


class _Logit:
    def __init__(self, lo, hi):
        self.lo, self.hi = lo, hi

    def fwd(self, x):
        return math.log((x - self.lo) / (self.hi - x))

    def inv(self, u):
        return self.lo + (self.hi - self.lo) / (1.0 + math.exp(-u))

    def ljd(self, x):
        return (math.log(x - self.lo) + math.log(self.hi - x)
                - math.log(self.hi - self.lo))


class _Ident:
    def fwd(self, x):
        return x

    def inv(self, u):
        return u

    def ljd(self, x):
        return 0.0


class _WarpScale:
    """Log-odds scale of a bounded warp parameter: x = b*tanh(z/2)."""

    def __init__(self, b):
        self.b = b

    def fwd(self, x):
        return math.log((x + self.b) / (self.b - x))

    def inv(self, u):
        return self.b * math.tanh(0.5 * u)

    def ljd(self, x):
        return math.log((self.b * self.b - x * x) / (2.0 * self.b))


# ---------------------------------------------------------------------------

def default_init(dataset: Dataset, priors: ResolvedPriors
                 ) -> tuple[ModelParams, WarpHyper, Permutation]:
    """Data-aware in-support starting state.

    Per-signal levels start at the sample means, nuggets at half the sample
    variances, the process variance at the pooled residual variance, bounded
    parameters at their support midpoints and decays at the geometric mean
    of their (conditional) bounds.
    """
    cfg = priors.config
    mus, taus, resid = [], [], []
    for s in dataset.signals:
        vals = s.values[s.mask] if s.mask is not None else s.values.ravel()
        m = float(vals.mean())
        mus.append(m)
        taus.append(max(float(vals.var()) / 2.0, 1e-6))
        resid.append(vals - m)
    sigma2 = max(float(np.concatenate(resid).var()), 1e-6)
    gamma = 0.5 * (cfg.a_gamma + priors.b_gamma)
    alpha = 0.5 * (cfg.a_alpha + cfg.b_alpha)
    btilde = 0.5 * (cfg.a_beta + cfg.b_beta)
    beta_l = np.full(dataset.n_signals, btilde * (1.0 - alpha))
    phi_d = math.sqrt(np.prod(priors.phi_d_bounds(beta_l)))
    phi_c = math.sqrt(np.prod(priors.phi_c_bounds(gamma)))
    phi_h = math.sqrt(priors.phi_h_lo * priors.phi_h_hi)
    g = GlobalParams(sigma2=sigma2, lam=0.5, phi_d=phi_d, phi_c=phi_c,
                     phi_h=phi_h, rho=0.5, gamma=gamma)
    sigs = tuple(
        SignalParams(
            sync=SyncParams(alpha=alpha,
                            beta=beta_from_tilde(btilde, alpha, priors.lengths[i]),
                            warp=WarpParams(0.0, 0.0)),
            nuis=NuisanceParams(mu=mus[i], tau2=taus[i]))
        for i in range(dataset.n_signals))
    hyper = WarpHyper(m_zeta=0.0, v_zeta=0.1, m_delta=0.0, v_delta=0.1)
    return ModelParams(globals_=g, signals=sigs), hyper, Permutation.identity(dataset.n_signals)


_GLOBAL_BLOCKS = (
    # (name, attribute, likelihood family, transform factory)
    ("sigma2", "sigma2", "scale", lambda rp: _Log()),
    ("lambda", "lam", "scale", lambda rp: _Logit(0.0, 1.0)),
    ("rho", "rho", "gc", lambda rp: _Logit(0.0, 1.0)),
    ("gamma", "gamma", "c", lambda rp: _Logit(rp.config.a_gamma, rp.b_gamma)),
    ("phi_d", "phi_d", "g", lambda rp: _Log()),
    ("phi_c", "phi_c", "c", lambda rp: _Log()),
    ("phi_h", "phi_h", "gc", lambda rp: _Logit(rp.phi_h_lo, rp.phi_h_hi)),
)


class _Sampler:
    def __init__(self, dataset: Dataset, priors: ResolvedPriors,
                 config: FitConfig, init, rng: np.random.Generator):
        self.rng = rng
        self.cfg = config
        self.rp = priors
        self.params, self.hyper, self.perm = init
        self.layout = PointLayout.from_dataset(dataset)
        self.lik = LikelihoodState(self.layout, config.nngp.k,
                                   backend=config.backend,
                                   n_threads=config.n_threads)
        self.lik.initialize(self.params.globals_,
                            np.array([sp.nuis.mu for sp in self.params.signals]),
                            np.array([sp.nuis.tau2 for sp in self.params.signals]),
                            self._warped_all(self.params),
                            self.perm.prev_signal_array())
        self.lp = log_prior(self.params, self.hyper, priors)
        if not math.isfinite(self.lp) or not math.isfinite(self.lik.total()):
            raise McmcError(
                f"non-finite initial log-posterior (prior={self.lp}, "
                f"loglik={self.lik.total()})")
        N = dataset.n_signals
        self.steps: dict[str, float] = {}
        self.nupd: dict[str, int] = {}
        for name, *_ in _GLOBAL_BLOCKS:
            self.steps[name] = math.log(0.4)
        for s in range(N):
            sig = dataset.signals[s]
            vals = sig.values[sig.mask] if sig.mask is not None else sig.values
            self.steps[f"mu_{s}"] = math.log(max(0.2 * float(np.std(vals)), 0.1))
            self.steps[f"tau2_{s}"] = math.log(0.4)
            self.steps[f"align_{s}"] = math.log(0.4)
            self.steps[f"warp_{s}"] = math.log(0.4)
        for name in ("m_zeta", "v_zeta", "m_delta", "v_delta"):
            self.steps[name] = math.log(0.4)
        self.trans = {name: factory(priors) for name, _, _, factory in _GLOBAL_BLOCKS}
        self.n_signals = N

    # -- plumbing ------------------------------------------------------------

    def _warped_one(self, s: int, sync: SyncParams) -> np.ndarray:
        l = float(self.layout.sig_len[s])
        return np.array([synchronize(t, sync, l)
                         for t in self.layout.real_times(s)])

    def _warped_all(self, params: ModelParams) -> list:
        return [self._warped_one(s, params.signals[s].sync)
                for s in range(self.layout.n_signals)]

    def _adapt(self, name: str, apr: float, adapting: bool):
        self.nupd[name] = self.nupd.get(name, 0) + 1
        if adapting:
            gain = self.cfg.adapt_c0 / self.nupd[name] ** self.cfg.adapt_kappa
            self.steps[name] = float(np.clip(
                self.steps[name] + gain * (apr - self.cfg.target_accept),
                math.log(1e-5), math.log(50.0)))

    def _mh(self, name: str, lp_new: float, lj_delta: float, lik_eval,
            adapting: bool) -> bool:
        """Shared accept/reject: lik_eval() -> (delta_ll, commit) or None."""
        if not math.isfinite(lp_new):
            self._adapt(name, 0.0, adapting)
            return False
        delta_ll, commit = lik_eval()
        logr = delta_ll + (lp_new - self.lp) + lj_delta
        apr = 1.0 if logr >= 0 else math.exp(max(logr, -745.0))
        accept = math.log(self.rng.uniform()) < logr
        if accept:
            commit()
            self.lp = lp_new
        self._adapt(name, apr, adapting)
        return accept

    # -- block updates ---------------------------------------------------------

    def _update_global(self, name: str, attr: str, family: str, adapting: bool):
        tr = self.trans[name]
        g = self.params.globals_
        x = getattr(g, attr)
        u2 = tr.fwd(x) + math.exp(self.steps[name]) * self.rng.normal()
        x2 = tr.inv(u2)
        if not math.isfinite(x2) or x2 == x:
            self._adapt(name, 0.0, adapting)
            return
        try:
            g2 = replace(g, **{attr: x2})
        except Exception:
            self._adapt(name, 0.0, adapting)
            return
        params2 = replace(self.params, globals_=g2)
        lp2 = log_prior(params2, self.hyper, self.rp)

        def lik_eval():
            if family == "scale":
                return self.lik.propose_scale(g2)
            return self.lik.propose_kernel(g2, family)

        if self._mh(name, lp2, tr.ljd(x2) - tr.ljd(x), lik_eval, adapting):
            self.params = params2

    def _update_nuisance(self, s: int, which: str, adapting: bool):
        name = f"{which}_{s}"
        sp = self.params.signals[s]
        if which == "mu":
            tr = _Ident()
            x = sp.nuis.mu
        else:
            tr = _Log()
            x = sp.nuis.tau2
        u2 = tr.fwd(x) + math.exp(self.steps[name]) * self.rng.normal()
        x2 = tr.inv(u2)
        if not math.isfinite(x2) or x2 <= 0 and which == "tau2":
            self._adapt(name, 0.0, adapting)
            return
        nuis2 = replace(sp.nuis, **{("mu" if which == "mu" else "tau2"): x2})
        sp2 = replace(sp, nuis=nuis2)
        params2 = self._with_signal(s, sp2)
        lp2 = log_prior(params2, self.hyper, self.rp)

        def lik_eval():
            return self.lik.propose_nuisance(s, nuis2.mu, nuis2.tau2)

        if self._mh(name, lp2, tr.ljd(x2) - tr.ljd(x), lik_eval, adapting):
            self.params = params2

    def _with_signal(self, s: int, sp2: SignalParams) -> ModelParams:
        sigs = list(self.params.signals)
        sigs[s] = sp2
        return replace(self.params, signals=tuple(sigs))

    def _update_sync(self, s: int, which: str, adapting: bool):
        name = f"{which}_{s}"
        cfg = self.rp.config
        sp = self.params.signals[s]
        step = math.exp(self.steps[name])
        l = self.rp.lengths[s]
        if which == "align":
            tr_a = _Logit(cfg.a_alpha, cfg.b_alpha)
            tr_b = _Logit(cfg.a_beta, cfg.b_beta)
            alpha = sp.sync.alpha
            bt = sp.sync.beta * l / (1.0 - alpha)
            bt = min(max(bt, cfg.a_beta + 1e-14), cfg.b_beta - 1e-14)
            a2 = tr_a.inv(tr_a.fwd(alpha) + step * self.rng.normal())
            b2 = tr_b.inv(tr_b.fwd(bt) + step * self.rng.normal())
            if not (math.isfinite(a2) and math.isfinite(b2)):
                self._adapt(name, 0.0, adapting)
                return
            sync2 = replace(sp.sync, alpha=a2, beta=beta_from_tilde(b2, a2, l))
            lj_delta = (tr_a.ljd(a2) - tr_a.ljd(alpha)
                        + tr_b.ljd(b2) - tr_b.ljd(bt))
        else:
            tr_z = _WarpScale(cfg.b_zeta)
            tr_d = _WarpScale(cfg.b_delta)
            z2 = tr_z.inv(tr_z.fwd(sp.sync.warp.zeta) + step * self.rng.normal())
            d2 = tr_d.inv(tr_d.fwd(sp.sync.warp.delta) + step * self.rng.normal())
            sync2 = replace(sp.sync, warp=WarpParams(z2, d2))
            lj_delta = (tr_z.ljd(z2) - tr_z.ljd(sp.sync.warp.zeta)
                        + tr_d.ljd(d2) - tr_d.ljd(sp.sync.warp.delta))
        sp2 = replace(sp, sync=sync2)
        params2 = self._with_signal(s, sp2)
        lp2 = log_prior(params2, self.hyper, self.rp)
        if not math.isfinite(lp2):
            self._adapt(name, 0.0, adapting)
            return
        warped_s = self._warped_one(s, sync2)

        def lik_eval():
            return self.lik.propose_sync(s, warped_s)

        if self._mh(name, lp2, lj_delta, lik_eval, adapting):
            self.params = params2

    def _update_hyper(self, name: str, adapting: bool):
        cfg = self.rp.config
        trs = {
            "m_zeta": _Logit(-cfg.b_m, cfg.b_m),
            "m_delta": _Logit(-cfg.b_m, cfg.b_m),
            "v_zeta": _Logit(0.0, cfg.b_v),
            "v_delta": _Logit(0.0, cfg.b_v),
        }
        tr = trs[name]
        x = getattr(self.hyper, name)
        u2 = tr.fwd(x) + math.exp(self.steps[name]) * self.rng.normal()
        x2 = tr.inv(u2)
        if not math.isfinite(x2) or x2 == x:
            self._adapt(name, 0.0, adapting)
            return
        try:
            hyper2 = replace(self.hyper, **{name: x2})
        except Exception:
            self._adapt(name, 0.0, adapting)
            return
        lp2 = log_prior(self.params, hyper2, self.rp)
        if self._mh(name, lp2, tr.ljd(x2) - tr.ljd(x),
                    lambda: (0.0, lambda: None), adapting):
            self.hyper = hyper2

    def _update_perm(self, adapting: bool):
        if self.n_signals < 2:
            return
        perm2 = permute_proposal(self.perm, self.rng)
        prev2 = perm2.prev_signal_array()
        delta_ll, commit = self.lik.propose_permutation(prev2)
        accept = math.log(self.rng.uniform()) < delta_ll
        if accept:
            commit()
            self.perm = perm2
        self.nupd["perm"] = self.nupd.get("perm", 0) + 1

    # -- sweep ---------------------------------------------------------------

    def sweep(self, adapting: bool):
        frozen = self.cfg.frozen
        for name, attr, family, _ in _GLOBAL_BLOCKS:
            if name not in frozen:
                self._update_global(name, attr, family, adapting)
        for s in range(self.n_signals):
            if "mu" not in frozen:
                self._update_nuisance(s, "mu", adapting)
            if "tau2" not in frozen:
                self._update_nuisance(s, "tau2", adapting)
            if "align" not in frozen:
                self._update_sync(s, "align", adapting)
            if "warp" not in frozen:
                self._update_sync(s, "warp", adapting)
        if "hyper" not in frozen:
            for name in ("m_zeta", "v_zeta", "m_delta", "v_delta"):
                self._update_hyper(name, adapting)
        if "perm" not in frozen:
            self._update_perm(adapting)

    def snapshot(self, iteration: int) -> PosteriorSample:
        lengths = self.rp.lengths
        sigs = self.params.signals
        return PosteriorSample(
            iteration=iteration,
            globals_=self.params.globals_,
            hyper=self.hyper,
            alpha=tuple(sp.sync.alpha for sp in sigs),
            beta_tilde=tuple(sp.sync.beta * lengths[i] / (1.0 - sp.sync.alpha)
                             for i, sp in enumerate(sigs)),
            zeta=tuple(sp.sync.warp.zeta for sp in sigs),
            delta=tuple(sp.sync.warp.delta for sp in sigs),
            mu=tuple(sp.nuis.mu for sp in sigs),
            tau2=tuple(sp.nuis.tau2 for sp in sigs),
            permutation=self.perm.order,
            lengths=lengths,
        )


def mcmc_run(dataset: Dataset, config: FitConfig, init, rng: np.random.Generator,
             n_iter: int, burn_in: int, thin: int) -> list:
    """Run the sampler; returns the thinned post-burn-in samples.

    ``init`` is a (ModelParams, WarpHyper, Permutation) triple or None for
    the default initialization. When ``config.stream_path`` is set, retained
    samples are appended to disk in batches of ``stream_every`` iterations.
    """
    dataset = validate_dataset(dataset)
    if not (0 <= burn_in < n_iter and thin >= 1):
        raise McmcError(f"bad run lengths: n_iter={n_iter}, burn_in={burn_in}, "
                        f"thin={thin}")
    rp = ResolvedPriors.resolve(config.priors, dataset)
    if init is None:
        init = default_init(dataset, rp)
    sampler = _Sampler(dataset, rp, config, init, rng)
    samples: list[PosteriorSample] = []
    stream = None
    pending: list[PosteriorSample] = []
    if config.stream_path:
        stream = open(config.stream_path, "w")
        stream.write(json.dumps({"meta": _chain_meta(sampler)}) + "\n")
        stream.flush()
    try:
        for it in range(1, n_iter + 1):
            sampler.sweep(adapting=it <= burn_in)
            if it > burn_in and (it - burn_in) % thin == 0:
                sample = sampler.snapshot(it)
                samples.append(sample)
                pending.append(sample)
            if stream is not None and (it % config.stream_every == 0 or it == n_iter):
                for s in pending:
                    stream.write(json.dumps(_sample_record(s)) + "\n")
                stream.flush()
                pending.clear()
    finally:
        if stream is not None:
            stream.close()
    return samples


# ---------------------------------------------------------------------------
# chain records, summaries

def _chain_meta(sampler: _Sampler) -> dict:
    return {
        "n_signals": sampler.n_signals,
        "lengths": list(sampler.rp.lengths),
        "k": sampler.cfg.nngp.k,
    }


def _sample_record(s: PosteriorSample) -> dict:
    g = s.globals_
    return {
        "iteration": s.iteration,
        "sigma2": g.sigma2, "lambda": g.lam, "gamma": g.gamma, "rho": g.rho,
        "phi_d": g.phi_d, "phi_c": g.phi_c, "phi_h": g.phi_h,
        "m_zeta": s.hyper.m_zeta, "v_zeta": s.hyper.v_zeta,
        "m_delta": s.hyper.m_delta, "v_delta": s.hyper.v_delta,
        "alpha": list(s.alpha), "beta_tilde": list(s.beta_tilde),
        "zeta": list(s.zeta), "delta": list(s.delta),
        "mu": list(s.mu), "tau2": list(s.tau2),
        "permutation": list(s.permutation),
    }


def _record_sample(rec: dict, lengths) -> PosteriorSample:
    return PosteriorSample(
        iteration=int(rec["iteration"]),
        globals_=GlobalParams(sigma2=rec["sigma2"], lam=rec["lambda"],
                              phi_d=rec["phi_d"], phi_c=rec["phi_c"],
                              phi_h=rec["phi_h"], rho=rec["rho"],
                              gamma=rec["gamma"]),
        hyper=WarpHyper(rec["m_zeta"], rec["v_zeta"], rec["m_delta"],
                        rec["v_delta"]),
        alpha=tuple(rec["alpha"]), beta_tilde=tuple(rec["beta_tilde"]),
        zeta=tuple(rec["zeta"]), delta=tuple(rec["delta"]),
        mu=tuple(rec["mu"]), tau2=tuple(rec["tau2"]),
        permutation=tuple(rec["permutation"]),
        lengths=tuple(lengths),
    )


def write_chain(path, samples, lengths, k: int) -> None:
    with open(path, "w") as f:
        f.write(json.dumps({"meta": {"n_signals": len(lengths),
                                     "lengths": list(lengths), "k": k}}) + "\n")
        for s in samples:
            f.write(json.dumps(_sample_record(s)) + "\n")


def read_chain(path) -> list:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise McmcError(f"{path}: empty chain file")
    meta = json.loads(lines[0])["meta"]
    return [_record_sample(json.loads(ln), meta["lengths"])
            for ln in lines[1:] if ln.strip()]


def flatten_sample(s: PosteriorSample) -> dict:
    """Named scalar view of one sample; per-signal names are 1-based."""
    g = s.globals_
    out = {
        "sigma2": g.sigma2, "lambda": g.lam, "gamma": g.gamma, "rho": g.rho,
        "phi_d": g.phi_d, "phi_h": g.phi_h, "phi_c": g.phi_c,
        "m_zeta": s.hyper.m_zeta, "v_zeta": s.hyper.v_zeta,
        "m_delta": s.hyper.m_delta, "v_delta": s.hyper.v_delta,
    }
    for name in ("alpha", "beta_tilde", "zeta", "delta", "mu", "tau2"):
        for i, v in enumerate(getattr(s, name)):
            out[f"{name}[{i + 1}]"] = float(v)
    return out


def summarize_samples(samples) -> dict:
    """Posterior mean and 2.5/50/97.5% quantiles per named parameter."""
    if not samples:
        raise McmcError("no samples to summarize")
    flat = [flatten_sample(s) for s in samples]
    names = list(flat[0])
    out = {}
    for name in names:
        vals = np.array([f[name] for f in flat])
        q = np.quantile(vals, [0.025, 0.5, 0.975])
        out[name] = {"mean": float(vals.mean()), "q2.5": float(q[0]),
                     "q50": float(q[1]), "q97.5": float(q[2])}
    return out


def write_summary(path, summary: dict) -> None:
    lines = ["parameter mean q2.5 q50 q97.5"]
    for name, row in summary.items():
        lines.append(f"{name} {row['mean']:.10g} {row['q2.5']:.10g} "
                     f"{row['q50']:.10g} {row['q97.5']:.10g}")
    Path(path).write_text("\n".join(lines) + "\n")
