import numpy as np
import pytest

from warpgp import (
    Dataset,
    FrequencyGrid,
    GlobalParams,
    ModelParams,
    Spectrogram,
    TimeGrid,
    validate_dataset,
)
from warpgp.params import signal_params_from_tilde

APPENDIX_GLOBALS = GlobalParams(sigma2=10.0, lam=0.5, phi_d=206.0,
                                phi_c=766.0, phi_h=0.69, rho=0.85, gamma=0.06)


def toy_dataset(n_signals=2, bins=4, t_counts=(5, 6), seed=0, mean=0.0,
                scale=3.0, step=0.01):
    rng = np.random.default_rng(seed)
    freq = FrequencyGrid.default(bins)
    sigs = []
    for i in range(n_signals):
        T = int(t_counts[i % len(t_counts)])
        sigs.append(Spectrogram(id=i + 1, time=TimeGrid(T, step), freq=freq,
                                values=rng.normal(mean, scale, (T, bins))))
    return validate_dataset(Dataset(signals=tuple(sigs), species_label="toy"))


def toy_params(dataset, globals_=APPENDIX_GLOBALS, seed=0):
    rng = np.random.default_rng(seed)
    sigs = tuple(
        signal_params_from_tilde(
            alpha=float(rng.uniform(0.0, 0.2)),
            beta_tilde=float(rng.uniform(0.75, 1.0)),
            zeta=float(rng.uniform(-0.7, 0.7)),
            delta=float(rng.uniform(-0.7, 0.7)),
            mu=float(rng.normal(0.0, 2.0)),
            tau2=float(rng.uniform(0.5, 2.0)),
            length=s.length,
        ) for s in dataset.signals)
    return ModelParams(globals_=globals_, signals=sigs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
