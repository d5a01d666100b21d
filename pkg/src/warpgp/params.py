"""Parameter bundles passed between inference, likelihood and prediction."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .covariance import GlobalParams, NuisanceParams, SignalParams
from .warping import SyncParams, WarpParams, beta_from_tilde

__all__ = ["WarpHyper", "ModelParams", "signal_params_from_tilde"]


@dataclass(frozen=True)
class WarpHyper:
    """Location/scale of the warp random effects on the transformed scale."""

    m_zeta: float
    v_zeta: float
    m_delta: float
    v_delta: float

    def __post_init__(self):
        if not (self.v_zeta > 0 and self.v_delta > 0):
            raise ValueError("warp random-effect variances must be positive")


@dataclass(frozen=True)
class ModelParams:
    """A full parameter state: global kernel parameters plus one
    SignalParams per signal (index aligned with the dataset)."""

    globals_: GlobalParams
    signals: tuple

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    def sync_map(self) -> dict:
        """1-based signal id -> SyncParams, as the covariance ops expect."""
        return {i + 1: sp.sync for i, sp in enumerate(self.signals)}

    def nuis_map(self) -> dict:
        return {i + 1: sp.nuis for i, sp in enumerate(self.signals)}

    def alphas(self) -> np.ndarray:
        return np.array([sp.sync.alpha for sp in self.signals])

    def betas(self) -> np.ndarray:
        return np.array([sp.sync.beta for sp in self.signals])


def signal_params_from_tilde(alpha: float, beta_tilde: float, zeta: float,
                             delta: float, mu: float, tau2: float,
                             length: float) -> SignalParams:
    """Assemble SignalParams from the normalized-rate parameterization."""
    beta = beta_from_tilde(beta_tilde, alpha, length)
    return SignalParams(
        sync=SyncParams(alpha=alpha, beta=beta,
                        warp=WarpParams(zeta=zeta, delta=delta)),
        nuis=NuisanceParams(mu=mu, tau2=tau2),
    )
