"""Packed array view of a dataset, shared by both likelihood backends.

Points are stored in the canonical global order (signals in dataset order,
each flattened ascending time then ascending frequency, masked points
skipped). All indices here are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grids import Dataset

__all__ = ["PointLayout"]


@dataclass
class PointLayout:
    n: int
    n_signals: int
    H: int
    pt_sig: np.ndarray      # (n,) int32 signal of each point
    pt_tidx: np.ndarray     # (n,) int32 grid time index
    pt_fidx: np.ndarray     # (n,) int32 grid frequency index
    pt_local: np.ndarray    # (n,) int32 rank among the signal's active points
    pt_y: np.ndarray        # (n,) float64 intensity
    sig_ptr: np.ndarray     # (N+1,) int64 point-range offsets per signal
    sig_T: np.ndarray       # (N,) int32 grid time count
    sig_len: np.ndarray     # (N,) float64 signal length
    sig_step: np.ndarray    # (N,) float64 time step
    freq: np.ndarray        # (H,) float64 log-frequency coordinates
    freq_step: float | None  # uniform spacing, or None
    time_ptr: np.ndarray    # concatenated per-signal run offsets, T_s+1 each
    tp_off: np.ndarray      # (N,) int64 start of each signal's block in time_ptr

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "PointLayout":
        N = ds.n_signals
        H = len(ds.freq)
        sigs, tixs, fixs, locs, ys, tptrs = [], [], [], [], [], []
        sig_ptr = np.zeros(N + 1, dtype=np.int64)
        for s, spec in enumerate(ds.signals):
            T = spec.time.count
            jj, kk = np.meshgrid(np.arange(T), np.arange(H), indexing="ij")
            jj = jj.ravel()
            kk = kk.ravel()
            vv = spec.values.ravel()
            if spec.mask is not None:
                keep = spec.mask.ravel()
                jj, kk, vv = jj[keep], kk[keep], vv[keep]
            m = jj.size
            sigs.append(np.full(m, s, dtype=np.int32))
            tixs.append(jj.astype(np.int32))
            fixs.append(kk.astype(np.int32))
            locs.append(np.arange(m, dtype=np.int32))
            ys.append(vv.astype(np.float64))
            # run boundaries: points of one time index are contiguous
            counts_t = np.bincount(jj, minlength=T)
            tptrs.append(sig_ptr[s] + np.concatenate(
                ([0], np.cumsum(counts_t))).astype(np.int64))
            sig_ptr[s + 1] = sig_ptr[s] + m
        tp_off = np.zeros(N, dtype=np.int64)
        sizes = np.array([s.time.count + 1 for s in ds.signals], dtype=np.int64)
        tp_off[1:] = np.cumsum(sizes)[:-1]
        return cls(
            n=int(sig_ptr[-1]),
            n_signals=N,
            H=H,
            pt_sig=np.concatenate(sigs),
            pt_tidx=np.concatenate(tixs),
            pt_fidx=np.concatenate(fixs),
            pt_local=np.concatenate(locs),
            pt_y=np.concatenate(ys),
            sig_ptr=sig_ptr,
            sig_T=np.array([s.time.count for s in ds.signals], dtype=np.int32),
            sig_len=np.array([s.length for s in ds.signals], dtype=np.float64),
            sig_step=np.array([s.time.step for s in ds.signals], dtype=np.float64),
            freq=ds.freq.values.astype(np.float64),
            freq_step=ds.freq.uniform_step,
            time_ptr=np.concatenate(tptrs),
            tp_off=tp_off,
        )

    def sig_counts(self) -> np.ndarray:
        return np.diff(self.sig_ptr).astype(np.int64)

    def points_of(self, s: int) -> np.ndarray:
        return np.arange(self.sig_ptr[s], self.sig_ptr[s + 1], dtype=np.int64)

    def real_times(self, s: int) -> np.ndarray:
        """Grid time coordinates of signal s."""
        return np.arange(self.sig_T[s], dtype=np.float64) * self.sig_step[s]

    def max_neighbor_bound(self, k: int) -> int:
        """Upper bound on any point's neighbor-set size for cap k per group."""
        counts = self.sig_counts()
        max_loc = int(counts.max()) - 1
        max_prev = int(counts.max())
        return int(min(4 * k, min(2 * k, max_loc) + min(2 * k, max_prev)))
