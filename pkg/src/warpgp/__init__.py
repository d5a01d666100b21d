"""Bayesian modelling of spectrogram collections with a shared latent shape.

Spectrograms of repeated animal calls are modelled as one Gaussian process
observed through per-signal time synchronization (offset, rate and a
Beta-CDF warp) mixed with a circular-time process that captures periodic
short-time-Fourier sampling artifacts. Inference runs an adaptive
Metropolis-within-Gibbs sampler on a nearest-neighbor factorization of the
likelihood; a representative spectrogram per species is then predicted and
compared across species by quadratic distance, hierarchical trees and
CRPS cross-validation.
"""

from ._core import BACKEND
from .covariance import (
    CovarianceError,
    GlobalParams,
    LatticePoint,
    NuisanceParams,
    SignalParams,
    build_cov_matrix,
    circ_dist,
    gneiting_circular,
    gneiting_shared,
    marginal_cov,
    practical_ranges,
    shared_time_dist,
)
from .grids import (
    Dataset,
    DatasetError,
    FrequencyGrid,
    PointRef,
    Spectrogram,
    TimeGrid,
    point_index,
    point_ref,
    validate_dataset,
)
from .nngp import (
    NeighborSets,
    NngpConfig,
    Permutation,
    build_neighbor_sets,
    nngp_loglik,
    permute_proposal,
)
from .params import ModelParams, WarpHyper, signal_params_from_tilde
from .warping import (
    SyncParams,
    WarpError,
    WarpParams,
    beta_from_tilde,
    regularized_beta_cdf,
    synchronize,
    warp,
)

__version__ = "0.1.0"
