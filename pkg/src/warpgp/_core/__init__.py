"""Likelihood engine backends.

The compiled Cython module is preferred when importable; a pure numpy
implementation with identical semantics is the fallback. Selection can be
forced with the environment variable WARPGP_BACKEND=compiled|python, and
the kernel thread count with WARPGP_THREADS (default: all cores).
"""
from __future__ import annotations

import os

import numpy as np

from .layout import PointLayout
from .tables import KernelTables

__all__ = ["BACKEND", "Kernels", "backend_module", "MODE_FULL", "MODE_C_ONLY",
           "MODE_PREV", "PD_JITTER", "PointLayout", "KernelTables", "KernelError"]

from ..covariance import PD_JITTER
from .py_kernels import MODE_C_ONLY, MODE_FULL, MODE_PREV, KernelError
from . import py_kernels as _py

try:
    from . import _kernels as _cy
except ImportError:  # pragma: no cover - depends on the build environment
    _cy = None


def _choose(name: str | None):
    name = (name or os.environ.get("WARPGP_BACKEND", "auto")).lower()
    if name in ("auto", ""):
        return "compiled" if _cy is not None else "python"
    if name in ("compiled", "cy", "cython"):
        if _cy is None:
            raise ImportError("compiled backend requested but the extension "
                              "module is not built")
        return "compiled"
    if name in ("python", "py", "numpy"):
        return "python"
    raise ValueError(f"unknown backend {name!r}")


BACKEND = _choose(None)


def backend_module(name: str | None = None):
    return _cy if _choose(name) == "compiled" else _py


def n_threads_default() -> int:
    # OpenMP fork/join overhead varies wildly across (sandboxed) hosts, so
    # parallel kernels are opt-in via WARPGP_THREADS.
    env = os.environ.get("WARPGP_THREADS")
    if env:
        return max(1, int(env))
    return 1


class Kernels:
    """Backend-dispatching handle tied to one point layout.

    Owns the per-thread scratch buffers so repeated kernel calls allocate
    nothing. ``max_m`` bounds the neighbor-set size (driven by the per-group
    cap k), and scratch is sized accordingly.
    """

    def __init__(self, layout: PointLayout, k: int, backend: str | None = None,
                 n_threads: int | None = None):
        self.layout = layout
        self.k = int(k)
        self.name = _choose(backend)
        self._mod = backend_module(self.name)
        self.n_threads = int(n_threads or n_threads_default())
        counts = layout.sig_counts()
        self.k_cap = int(min(self.k, counts.max()))
        self.max_m = layout.max_neighbor_bound(self.k)
        nt = self.n_threads
        if self.name == "compiled":
            self._S = np.empty((nt, self.max_m * self.max_m))
            self._c = np.empty((nt, self.max_m))
            self._r = np.empty((nt, self.max_m))
            c_cap = int(min(2 * self.k, counts.max()))
            self._hcg = np.empty((nt, max(1, self.k_cap)))
            self._hig = np.empty((nt, max(1, self.k_cap)), dtype=np.int64)
            self._hcc = np.empty((nt, max(1, c_cap)))
            self._hic = np.empty((nt, max(1, c_cap)), dtype=np.int64)
            self._grp = np.empty((nt, 4 * self.k), dtype=np.int32)

    def _tab_args(self, tables: KernelTables):
        lo = self.layout
        return (
            lo.pt_sig, lo.pt_tidx, lo.pt_fidx, lo.pt_local, lo.pt_y,
            lo.sig_ptr, lo.sig_T, lo.time_ptr, lo.tp_off, lo.freq, lo.H,
            lo.freq_step is not None,
            tables.prev_sig, tables.same_off, tables.prev_off,
            tables.g_A_same, tables.g_B_same, tables.g_Q_same,
            tables.c_A_same, tables.c_B_same, tables.c_Q_same,
            tables.g_A_prev, tables.g_B_prev, tables.g_Q_prev,
            tables.c_A_prev, tables.c_B_prev, tables.c_Q_prev,
        )

    def rebuild_sets(self, tables: KernelTables, points: np.ndarray, mode: int,
                     nbr: np.ndarray, cnt: np.ndarray) -> None:
        points = np.ascontiguousarray(points, dtype=np.int64)
        if self.name == "compiled":
            self._mod.rebuild_sets(*self._tab_args(tables), self.k, points,
                                   mode, nbr, cnt, self._hcg, self._hig,
                                   self._hcc, self._hic, self._grp,
                                   tables.dj_order, self.n_threads)
        else:
            self._mod.rebuild_sets(self.layout, tables, self.k, points, mode,
                                   nbr, cnt)

    def eval_factors(self, tables: KernelTables, sigma2: float, lam: float,
                     mu: np.ndarray, tau2: np.ndarray, nbr: np.ndarray,
                     cnt: np.ndarray, points: np.ndarray,
                     out: np.ndarray) -> None:
        points = np.ascontiguousarray(points, dtype=np.int64)
        if self.name == "compiled":
            fails = self._mod.eval_factors(*self._tab_args(tables), sigma2,
                                           lam, mu, tau2, nbr, cnt, points,
                                           out, PD_JITTER, self._S, self._c,
                                           self._r, self.n_threads)
        else:
            fails = self._mod.eval_factors(self.layout, tables, sigma2, lam,
                                           mu, tau2, nbr, cnt, points, out,
                                           PD_JITTER)
        if fails:
            raise KernelError(
                f"{fails} conditional factor(s) failed to factorize after "
                f"the jitter retry")
