"""Incremental likelihood evaluation for the sampler.

Caches kernel tables, neighbor sets and one conditional-Gaussian term per
point, and evaluates parameter proposals by recomputing only the pieces a
proposal can touch:

  sigma2 / weight          all factor terms, no tables, no sets
  shared-time decay        shared-time tables, all sets, all terms
  freq decay / interaction both table families, all sets, all terms
  period / circular decay  circular tables, circular groups only, all terms
  per-signal mean/nugget   terms of the signal and its successor
  per-signal sync          tables touching the signal; its sets in full,
                           successor's predecessor+circular groups; both terms
  permutation              predecessor tables; predecessor+circular groups and
                           terms of signals whose predecessor changed

Proposals write into scratch arrays; commit() copies the affected slices
into the committed state, so a rejected proposal costs no restoration work.
"""
from __future__ import annotations

import numpy as np

from ..covariance import GlobalParams
from . import Kernels, MODE_C_ONLY, MODE_FULL, MODE_PREV
from .layout import PointLayout
from .tables import KernelTables

__all__ = ["LikelihoodState"]


class LikelihoodState:
    def __init__(self, layout: PointLayout, k: int, backend: str | None = None,
                 n_threads: int | None = None):
        self.layout = layout
        self.k = int(k)
        self.kern = Kernels(layout, k, backend=backend, n_threads=n_threads)
        n = layout.n
        self.nbr = np.full((n, 4 * k), -1, dtype=np.int32)
        self.cnt = np.zeros((n, 4), dtype=np.int32)
        self.factors = np.zeros(n)
        self._nbr_s = np.full((n, 4 * k), -1, dtype=np.int32)
        self._cnt_s = np.zeros((n, 4), dtype=np.int32)
        self._fac_s = np.zeros(n)
        self._all = np.arange(n, dtype=np.int64)
        # committed parameter view
        self.globals_: GlobalParams | None = None
        self.mu = np.zeros(layout.n_signals)
        self.tau2 = np.ones(layout.n_signals)
        self.warped: list = []
        self.prev_sig = np.full(layout.n_signals, -1, dtype=np.int32)
        self.tables: KernelTables | None = None

    # -- helpers -------------------------------------------------------------

    def _succ(self, s: int, prev_sig=None) -> int:
        prev = self.prev_sig if prev_sig is None else prev_sig
        hits = np.flatnonzero(prev == s)
        return int(hits[0]) if hits.size else -1

    def _pts(self, signals) -> np.ndarray:
        segs = [self.layout.points_of(s) for s in signals if s >= 0]
        return np.concatenate(segs) if segs else np.empty(0, dtype=np.int64)

    def total(self) -> float:
        return float(self.factors.sum())

    # -- full initialization ---------------------------------------------------

    def initialize(self, globals_: GlobalParams, mu: np.ndarray, tau2: np.ndarray,
                   warped: list, prev_sig: np.ndarray) -> float:
        self.globals_ = globals_
        self.mu = np.asarray(mu, dtype=np.float64).copy()
        self.tau2 = np.asarray(tau2, dtype=np.float64).copy()
        self.warped = [w.copy() for w in warped]
        self.prev_sig = np.asarray(prev_sig, dtype=np.int32).copy()
        self.tables = KernelTables.build(self.layout, self.warped, self.prev_sig,
                                         globals_)
        self.kern.rebuild_sets(self.tables, self._all, MODE_FULL, self.nbr, self.cnt)
        self.kern.eval_factors(self.tables, globals_.sigma2, globals_.lam,
                               self.mu, self.tau2, self.nbr, self.cnt,
                               self._all, self.factors)
        return self.total()

    # -- proposal machinery ----------------------------------------------------

    def _eval(self, tables, globals_, mu, tau2, rebuilds, affected):
        """rebuilds: list of (points, mode); affected: factor points."""
        if rebuilds:
            self._nbr_s[affected] = self.nbr[affected]
            self._cnt_s[affected] = self.cnt[affected]
            for pts, mode in rebuilds:
                if pts.size:
                    self.kern.rebuild_sets(tables, pts, mode, self._nbr_s,
                                           self._cnt_s)
            nbr, cnt = self._nbr_s, self._cnt_s
        else:
            nbr, cnt = self.nbr, self.cnt
        self.kern.eval_factors(tables, globals_.sigma2, globals_.lam, mu, tau2,
                               nbr, cnt, affected, self._fac_s)
        delta = float(self._fac_s[affected].sum() - self.factors[affected].sum())
        return delta, bool(rebuilds)

    def _commit(self, tables, globals_, mu, tau2, warped, prev_sig,
                rebuilt, affected):
        self.tables = tables
        self.globals_ = globals_
        self.mu = mu
        self.tau2 = tau2
        if warped is not None:
            self.warped = warped
        if prev_sig is not None:
            self.prev_sig = prev_sig
        if rebuilt:
            self.nbr[affected] = self._nbr_s[affected]
            self.cnt[affected] = self._cnt_s[affected]
        self.factors[affected] = self._fac_s[affected]

    def propose_scale(self, globals_new: GlobalParams):
        """sigma2 or weight move: covariance scale only."""
        aff = self._all
        delta, rb = self._eval(self.tables, globals_new, self.mu, self.tau2,
                               [], aff)
        tables = self.tables

        def commit():
            self._commit(tables, globals_new, self.mu, self.tau2, None, None,
                         rb, aff)
        return delta, commit

    def propose_kernel(self, globals_new: GlobalParams, family: str):
        """Decay/interaction/period move; family in {'g', 'c', 'gc'}."""
        if family == "g":
            tables = self.tables.with_g(self.warped, globals_new)
            mode = MODE_FULL
        elif family == "c":
            tables = self.tables.with_c(globals_new)
            mode = MODE_C_ONLY
        elif family == "gc":
            tables = self.tables.with_gc(self.warped, globals_new)
            mode = MODE_FULL
        else:
            raise ValueError(family)
        aff = self._all
        delta, rb = self._eval(tables, globals_new, self.mu, self.tau2,
                               [(aff, mode)], aff)

        def commit():
            self._commit(tables, globals_new, self.mu, self.tau2, None, None,
                         rb, aff)
        return delta, commit

    def propose_nuisance(self, s: int, mu_new: float, tau2_new: float):
        mu = self.mu.copy()
        tau2 = self.tau2.copy()
        mu[s] = mu_new
        tau2[s] = tau2_new
        aff = self._pts([s, self._succ(s)])
        delta, rb = self._eval(self.tables, self.globals_, mu, tau2, [], aff)
        tables, globals_ = self.tables, self.globals_

        def commit():
            self._commit(tables, globals_, mu, tau2, None, None, rb, aff)
        return delta, commit

    def propose_sync(self, s: int, warped_s: np.ndarray):
        warped = list(self.warped)
        warped[s] = warped_s
        tables = self.tables.with_signal_warp(s, warped, self.globals_)
        succ = self._succ(s)
        rebuilds = [(self._pts([s]), MODE_FULL)]
        if succ >= 0:
            rebuilds.append((self._pts([succ]), MODE_PREV))
        aff = self._pts([s, succ])
        delta, rb = self._eval(tables, self.globals_, self.mu, self.tau2,
                               rebuilds, aff)
        globals_, mu, tau2 = self.globals_, self.mu, self.tau2

        def commit():
            self._commit(tables, globals_, mu, tau2, warped, None, rb, aff)
        return delta, commit

    def propose_permutation(self, prev_new: np.ndarray):
        prev_new = np.asarray(prev_new, dtype=np.int32)
        tables = self.tables.with_permutation(self.warped, prev_new,
                                              self.globals_)
        changed = np.flatnonzero(prev_new != self.prev_sig)
        aff = self._pts(list(changed))
        rebuilds = [(aff, MODE_PREV)]
        delta, rb = self._eval(tables, self.globals_, self.mu, self.tau2,
                               rebuilds, aff)
        globals_, mu, tau2 = self.globals_, self.mu, self.tau2

        def commit():
            self._commit(tables, globals_, mu, tau2, None, prev_new, rb, aff)
        return delta, commit
