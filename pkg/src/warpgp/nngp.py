"""Nearest-neighbor factorization of the joint log-likelihood.

Signals are laid out in a permutation; each point conditions on at most
k earlier points of its own signal and k points of the preceding signal
under the shared-time kernel, plus the same budgets ranked under the
circular kernel (excluding points already picked), for a cap of 4k
neighbors. The joint density is then the product of univariate
conditional Gaussians in the canonical point order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._core import Kernels, KernelTables, MODE_FULL, PointLayout
from .grids import Dataset, validate_dataset
from .params import ModelParams
from .warping import synchronize

__all__ = [
    "NngpConfig",
    "Permutation",
    "NeighborSets",
    "build_neighbor_sets",
    "nngp_loglik",
    "permute_proposal",
]


@dataclass(frozen=True)
class NngpConfig:
    """Neighbor budget: k per group, 4k total."""

    k: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("neighbor cap k must be >= 1")


@dataclass(frozen=True)
class Permutation:
    """Ordering of the signals, as a tuple of 1-based signal ids."""

    order: tuple

    def __post_init__(self):
        order = tuple(int(o) for o in self.order)
        object.__setattr__(self, "order", order)
        if sorted(order) != list(range(1, len(order) + 1)):
            raise ValueError(f"not a permutation of 1..{len(order)}: {order}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    def prev_signal_array(self) -> np.ndarray:
        """0-based predecessor of each signal in this ordering (-1 if first)."""
        n = len(self.order)
        prev = np.full(n, -1, dtype=np.int32)
        for pos in range(1, n):
            prev[self.order[pos] - 1] = self.order[pos - 1] - 1
        return prev


@dataclass
class NeighborSets:
    """Per-point conditioning sets plus the ordering they were built under."""

    permutation: Permutation
    k: int
    nbr: np.ndarray  # (n, 4k) int32 global point ids, -1 padded
    cnt: np.ndarray  # (n, 4) int32 sizes of the four groups

    def groups(self, p: int):
        """The four groups of point p as tuples of global point indices:
        (same-signal shared-time, predecessor shared-time,
        same-signal circular, predecessor circular)."""
        a, b, c, d = (int(x) for x in self.cnt[p])
        row = self.nbr[p]
        return (tuple(row[:a]), tuple(row[a:a + b]),
                tuple(row[a + b:a + b + c]), tuple(row[a + b + c:a + b + c + d]))

    def neighbors(self, p: int) -> tuple:
        m = int(self.cnt[p].sum())
        return tuple(self.nbr[p, :m])


def warped_times(layout: PointLayout, params: ModelParams) -> list:
    """Synchronized time of every grid time point, per signal."""
    out = []
    for s in range(layout.n_signals):
        sync = params.signals[s].sync
        l = float(layout.sig_len[s])
        out.append(np.array([synchronize(t, sync, l)
                             for t in layout.real_times(s)]))
    return out


def _prepare(dataset: Dataset, permutation: Permutation, params: ModelParams,
             config: NngpConfig, backend: str | None = None):
    validate_dataset(dataset)
    if len(permutation.order) != dataset.n_signals:
        raise ValueError("permutation length != number of signals")
    layout = PointLayout.from_dataset(dataset)
    kern = Kernels(layout, config.k, backend=backend)
    prev = permutation.prev_signal_array()
    tables = KernelTables.build(layout, warped_times(layout, params), prev,
                                params.globals_)
    return layout, kern, tables


def build_neighbor_sets(dataset: Dataset, permutation: Permutation,
                        params: ModelParams, config: NngpConfig,
                        backend: str | None = None) -> NeighborSets:
    """Rank and select the four neighbor groups for every point."""
    layout, kern, tables = _prepare(dataset, permutation, params, config, backend)
    nbr = np.full((layout.n, 4 * config.k), -1, dtype=np.int32)
    cnt = np.zeros((layout.n, 4), dtype=np.int32)
    kern.rebuild_sets(tables, np.arange(layout.n, dtype=np.int64), MODE_FULL,
                      nbr, cnt)
    return NeighborSets(permutation=permutation, k=config.k, nbr=nbr, cnt=cnt)


def nngp_loglik(dataset: Dataset, params: ModelParams, sets: NeighborSets,
                backend: str | None = None) -> float:
    """Approximate joint log-density: sum of conditional Gaussian terms."""
    config = NngpConfig(k=sets.k)
    layout, kern, tables = _prepare(dataset, sets.permutation, params, config,
                                    backend)
    mu = np.array([sp.nuis.mu for sp in params.signals])
    tau2 = np.array([sp.nuis.tau2 for sp in params.signals])
    out = np.empty(layout.n)
    kern.eval_factors(tables, params.globals_.sigma2, params.globals_.lam,
                      mu, tau2, sets.nbr, sets.cnt,
                      np.arange(layout.n, dtype=np.int64), out)
    return float(out.sum())


def permute_proposal(permutation: Permutation, rng: np.random.Generator) -> Permutation:
    """Swap one uniformly chosen pair of positions; identity when N = 1.

    The proposal is symmetric: any transposition is its own inverse and all
    N(N-1)/2 pairs are equally likely.
    """
    n = len(permutation.order)
    if n < 2:
        return permutation
    i = int(rng.integers(0, n))
    j = int(rng.integers(0, n - 1))
    if j >= i:
        j += 1
    order = list(permutation.order)
    order[i], order[j] = order[j], order[i]
    return Permutation(tuple(order))
