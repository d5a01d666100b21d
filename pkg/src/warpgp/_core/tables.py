"""Per-time-pair kernel tables shared by both backends.

Every covariance evaluation between lattice points factors into a
time-pair part and a frequency part. For each needed signal pair (every
signal with itself, and each signal with its predecessor in the current
permutation) we tabulate, per time pair:

    A = 1/(phi*delta + 1)            the time factor,
    B = phi_h * (phi*delta + 1)^(-rho/2)   the frequency decay rate,

once for the shared-time kernel (delta = warped-time distance) and once
for the circular kernel (delta = wrapped real-time distance). When the
frequency grid is evenly spaced we additionally tabulate
Q[m] = exp(-B * step * m) for m = 0..H-1, so a correlation lookup needs no
transcendental calls: corr = A * Q[|k - k'|].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..covariance import GlobalParams, circ_dist
from .layout import PointLayout

__all__ = ["KernelTables"]


def _time_part(dist: np.ndarray, phi_t: float, phi_h: float, rho: float):
    u = phi_t * dist + 1.0
    return 1.0 / u, phi_h * u ** (-0.5 * rho)


def _q_rows(B: np.ndarray, fstep: float, H: int) -> np.ndarray:
    q = np.exp(-B * fstep)
    out = np.empty(B.shape + (H,))
    out[..., 0] = 1.0
    for m in range(1, H):
        out[..., m] = out[..., m - 1] * q
    return out


@dataclass
class KernelTables:
    layout: PointLayout
    prev_sig: np.ndarray        # (N,) int32, -1 when the signal has no predecessor
    same_off: np.ndarray        # (N,) int64 entry offsets, block s holds T_s^2 entries
    prev_off: np.ndarray        # (N,) int64, block s holds T_prev * T_s entries
    g_A_same: np.ndarray
    g_B_same: np.ndarray
    c_A_same: np.ndarray
    c_B_same: np.ndarray
    g_A_prev: np.ndarray
    g_B_prev: np.ndarray
    c_A_prev: np.ndarray
    c_B_prev: np.ndarray
    g_Q_same: np.ndarray        # (S2*H,) when uniform grid, size-0 otherwise
    c_Q_same: np.ndarray
    g_Q_prev: np.ndarray
    c_Q_prev: np.ndarray
    dj_order: np.ndarray        # time-index offsets sorted by circular distance
                                # (empty when signals have unequal time steps)

    @property
    def uniform(self) -> bool:
        return self.g_Q_same.size > 0

    @staticmethod
    def _dj_order(layout: PointLayout, gamma: float) -> np.ndarray:
        steps = layout.sig_step
        if not np.all(steps == steps[0]):
            return np.empty(0, dtype=np.int32)
        max_t = int(layout.sig_T.max())
        dj = np.arange(max_t, dtype=np.int64)
        dc = circ_dist(dj * steps[0], gamma)
        return np.lexsort((dj, dc)).astype(np.int32)

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, layout: PointLayout, warped: list, prev_sig: np.ndarray,
              g: GlobalParams) -> "KernelTables":
        N = layout.n_signals
        T = layout.sig_T
        same_sizes = (T.astype(np.int64)) ** 2
        same_off = np.concatenate(([0], np.cumsum(same_sizes)[:-1]))
        prev_sizes = np.array(
            [0 if prev_sig[s] < 0 else int(T[prev_sig[s]]) * int(T[s]) for s in range(N)],
            dtype=np.int64,
        )
        prev_off = np.concatenate(([0], np.cumsum(prev_sizes)[:-1]))
        S2 = int(same_sizes.sum())
        SP = int(prev_sizes.sum())
        H = layout.H
        qn_same = S2 * H if layout.freq_step is not None else 0
        qn_prev = SP * H if layout.freq_step is not None else 0
        tb = cls(
            layout=layout,
            prev_sig=np.asarray(prev_sig, dtype=np.int32).copy(),
            same_off=same_off, prev_off=prev_off,
            g_A_same=np.empty(S2), g_B_same=np.empty(S2),
            c_A_same=np.empty(S2), c_B_same=np.empty(S2),
            g_A_prev=np.empty(SP), g_B_prev=np.empty(SP),
            c_A_prev=np.empty(SP), c_B_prev=np.empty(SP),
            g_Q_same=np.empty(qn_same), c_Q_same=np.empty(qn_same),
            g_Q_prev=np.empty(qn_prev), c_Q_prev=np.empty(qn_prev),
            dj_order=cls._dj_order(layout, g.gamma),
        )
        for s in range(N):
            tb._fill_same_g(s, warped, g)
            tb._fill_same_c(s, g)
            tb._fill_prev_g(s, warped, g)
            tb._fill_prev_c(s, g)
        return tb

    def _block_slices(self, s: int, same: bool):
        T = self.layout.sig_T
        if same:
            size = int(T[s]) ** 2
            off = int(self.same_off[s])
        else:
            p = int(self.prev_sig[s])
            size = 0 if p < 0 else int(T[p]) * int(T[s])
            off = int(self.prev_off[s])
        return off, size

    def _store(self, A, B, arr_A, arr_B, arr_Q, off, size):
        arr_A[off:off + size] = A.ravel()
        arr_B[off:off + size] = B.ravel()
        if arr_Q.size:
            H = self.layout.H
            arr_Q[off * H:(off + size) * H] = _q_rows(
                B, self.layout.freq_step, H).reshape(-1)

    def _fill_same_g(self, s: int, warped, g: GlobalParams):
        off, size = self._block_slices(s, True)
        d = np.abs(warped[s][:, None] - warped[s][None, :])
        A, B = _time_part(d, g.phi_d, g.phi_h, g.rho)
        self._store(A, B, self.g_A_same, self.g_B_same, self.g_Q_same, off, size)

    def _fill_same_c(self, s: int, g: GlobalParams):
        off, size = self._block_slices(s, True)
        t = self.layout.real_times(s)
        d = circ_dist(np.abs(t[:, None] - t[None, :]), g.gamma)
        A, B = _time_part(d, g.phi_c, g.phi_h, g.rho)
        self._store(A, B, self.c_A_same, self.c_B_same, self.c_Q_same, off, size)

    def _fill_prev_g(self, s: int, warped, g: GlobalParams):
        p = int(self.prev_sig[s])
        if p < 0:
            return
        off, size = self._block_slices(s, False)
        d = np.abs(warped[p][:, None] - warped[s][None, :])
        A, B = _time_part(d, g.phi_d, g.phi_h, g.rho)
        self._store(A, B, self.g_A_prev, self.g_B_prev, self.g_Q_prev, off, size)

    def _fill_prev_c(self, s: int, g: GlobalParams):
        p = int(self.prev_sig[s])
        if p < 0:
            return
        off, size = self._block_slices(s, False)
        tp = self.layout.real_times(p)
        ts = self.layout.real_times(s)
        d = circ_dist(np.abs(tp[:, None] - ts[None, :]), g.gamma)
        A, B = _time_part(d, g.phi_c, g.phi_h, g.rho)
        self._store(A, B, self.c_A_prev, self.c_B_prev, self.c_Q_prev, off, size)

    # -- copy-on-write refills (proposals never mutate committed tables) ----

    def _clone(self, copy_g: bool, copy_c: bool) -> "KernelTables":
        def cp(a, do):
            return a.copy() if do else a
        return KernelTables(
            layout=self.layout, prev_sig=self.prev_sig,
            same_off=self.same_off, prev_off=self.prev_off,
            g_A_same=cp(self.g_A_same, copy_g), g_B_same=cp(self.g_B_same, copy_g),
            c_A_same=cp(self.c_A_same, copy_c), c_B_same=cp(self.c_B_same, copy_c),
            g_A_prev=cp(self.g_A_prev, copy_g), g_B_prev=cp(self.g_B_prev, copy_g),
            c_A_prev=cp(self.c_A_prev, copy_c), c_B_prev=cp(self.c_B_prev, copy_c),
            g_Q_same=cp(self.g_Q_same, copy_g), c_Q_same=cp(self.c_Q_same, copy_c),
            g_Q_prev=cp(self.g_Q_prev, copy_g), c_Q_prev=cp(self.c_Q_prev, copy_c),
            dj_order=self.dj_order,
        )

    def with_g(self, warped, g: GlobalParams) -> "KernelTables":
        """All shared-time blocks recomputed (decay/shape change)."""
        tb = self._clone(copy_g=True, copy_c=False)
        for s in range(self.layout.n_signals):
            tb._fill_same_g(s, warped, g)
            tb._fill_prev_g(s, warped, g)
        return tb

    def with_c(self, g: GlobalParams) -> "KernelTables":
        """All circular blocks recomputed (gamma or phi_c change)."""
        tb = self._clone(copy_g=False, copy_c=True)
        tb.dj_order = self._dj_order(self.layout, g.gamma)
        for s in range(self.layout.n_signals):
            tb._fill_same_c(s, g)
            tb._fill_prev_c(s, g)
        return tb

    def with_gc(self, warped, g: GlobalParams) -> "KernelTables":
        """Both kernel families recomputed (phi_h or rho change)."""
        tb = self._clone(copy_g=True, copy_c=True)
        tb.dj_order = self._dj_order(self.layout, g.gamma)
        for s in range(self.layout.n_signals):
            tb._fill_same_g(s, warped, g)
            tb._fill_prev_g(s, warped, g)
            tb._fill_same_c(s, g)
            tb._fill_prev_c(s, g)
        return tb

    def with_signal_warp(self, s: int, warped, g: GlobalParams) -> "KernelTables":
        """Shared-time blocks touching signal s recomputed (sync change)."""
        tb = self._clone(copy_g=True, copy_c=False)
        tb._fill_same_g(s, warped, g)
        tb._fill_prev_g(s, warped, g)
        for u in range(self.layout.n_signals):
            if int(self.prev_sig[u]) == s:
                tb._fill_prev_g(u, warped, g)
        return tb

    def with_permutation(self, warped, prev_sig_new: np.ndarray,
                         g: GlobalParams) -> "KernelTables":
        """Predecessor blocks rebuilt for a new permutation (sizes change)."""
        N = self.layout.n_signals
        T = self.layout.sig_T
        prev_sizes = np.array(
            [0 if prev_sig_new[s] < 0 else int(T[prev_sig_new[s]]) * int(T[s])
             for s in range(N)], dtype=np.int64)
        prev_off = np.concatenate(([0], np.cumsum(prev_sizes)[:-1]))
        SP = int(prev_sizes.sum())
        H = self.layout.H
        qn = SP * H if self.layout.freq_step is not None else 0
        tb = KernelTables(
            layout=self.layout,
            prev_sig=np.asarray(prev_sig_new, dtype=np.int32).copy(),
            same_off=self.same_off, prev_off=prev_off,
            g_A_same=self.g_A_same, g_B_same=self.g_B_same,
            c_A_same=self.c_A_same, c_B_same=self.c_B_same,
            g_A_prev=np.empty(SP), g_B_prev=np.empty(SP),
            c_A_prev=np.empty(SP), c_B_prev=np.empty(SP),
            g_Q_same=self.g_Q_same, c_Q_same=self.c_Q_same,
            g_Q_prev=np.empty(qn), c_Q_prev=np.empty(qn),
            dj_order=self.dj_order,
        )
        for s in range(N):
            tb._fill_prev_g(s, warped, g)
            tb._fill_prev_c(s, g)
        return tb
