"""Pure numpy implementation of the likelihood hot kernels.

Semantics must match the compiled backend exactly: same group sizes,
same correlation ranking with ties broken by smaller global point index,
same factor arithmetic. The compiled module is preferred at import time;
this one keeps the package fully functional without a C toolchain and
serves as the reference in backend-equivalence tests.
"""
from __future__ import annotations

import numpy as np

from .layout import PointLayout
from .tables import KernelTables

NAME = "python"

MODE_FULL = 0
MODE_C_ONLY = 1
MODE_PREV = 2

_LOG_2PI = 1.8378770664093453


class KernelError(RuntimeError):
    """Numerical failure inside a likelihood kernel."""


def _corr(layout: PointLayout, tables: KernelTables, family: str,
          p: int, cand: np.ndarray) -> np.ndarray:
    """Correlation of point p with candidate points (one kernel family)."""
    sp = int(layout.pt_sig[p])
    tp = int(layout.pt_tidx[p])
    fp = int(layout.pt_fidx[p])
    sc = layout.pt_sig[cand]
    tc = layout.pt_tidx[cand]
    fc = layout.pt_fidx[cand]
    A_same = getattr(tables, f"{family}_A_same")
    B_same = getattr(tables, f"{family}_B_same")
    Q_same = getattr(tables, f"{family}_Q_same")
    A_prev = getattr(tables, f"{family}_A_prev")
    B_prev = getattr(tables, f"{family}_B_prev")
    Q_prev = getattr(tables, f"{family}_Q_prev")
    T = layout.sig_T
    out = np.empty(cand.shape)
    same = sc == sp
    if same.any():
        off = tables.same_off[sp] + np.int64(tp) * T[sp] + tc[same]
        if tables.uniform:
            dk = np.abs(fp - fc[same])
            out[same] = A_same[off] * Q_same[off * layout.H + dk]
        else:
            dh = np.abs(layout.freq[fp] - layout.freq[fc[same]])
            out[same] = A_same[off] * np.exp(-B_same[off] * dh)
    cross = ~same
    if cross.any():
        # candidates live in the predecessor of p's signal
        if int(tables.prev_sig[sp]) not in set(np.unique(sc[cross]).tolist()):
            raise KernelError("candidate from a non-adjacent signal")
        off = tables.prev_off[sp] + tc[cross].astype(np.int64) * T[sp] + tp
        if tables.uniform:
            dk = np.abs(fp - fc[cross])
            out[cross] = A_prev[off] * Q_prev[off * layout.H + dk]
        else:
            dh = np.abs(layout.freq[fp] - layout.freq[fc[cross]])
            out[cross] = A_prev[off] * np.exp(-B_prev[off] * dh)
    return out


def _top(cand: np.ndarray, corr: np.ndarray, kk: int) -> np.ndarray:
    """Indices of the kk most correlated candidates, ties to smaller id."""
    if kk <= 0 or cand.size == 0:
        return cand[:0]
    order = np.lexsort((cand, -corr))
    return cand[order[:kk]]


def rebuild_sets(layout: PointLayout, tables: KernelTables, k: int,
                 points: np.ndarray, mode: int,
                 nbr: np.ndarray, cnt: np.ndarray) -> None:
    """Fill neighbor rows for the given points (in place).

    ``nbr`` is (n, 4k) int32, ``cnt`` is (n, 4) int32 with the sizes of the
    four segments [same-signal shared-time | predecessor shared-time |
    same-signal circular | predecessor circular] stored in that order.
    With MODE_C_ONLY the first two segments are kept; with MODE_PREV only
    the first is kept.
    """
    for p in np.asarray(points, dtype=np.int64):
        s = int(layout.pt_sig[p])
        loc = int(layout.pt_local[p])
        same_cand = np.arange(layout.sig_ptr[s], layout.sig_ptr[s] + loc,
                              dtype=np.int64)
        pv = int(tables.prev_sig[s])
        if pv >= 0:
            prev_cand = np.arange(layout.sig_ptr[pv], layout.sig_ptr[pv + 1],
                                  dtype=np.int64)
        else:
            prev_cand = np.empty(0, dtype=np.int64)

        if mode == MODE_FULL:
            mg = _top(same_cand, _corr(layout, tables, "g", p, same_cand),
                      min(k, loc)) if loc else same_cand[:0]
            rg = _top(prev_cand, _corr(layout, tables, "g", p, prev_cand),
                      min(k, prev_cand.size)) if prev_cand.size else prev_cand[:0]
        else:
            n_mg, n_rg = int(cnt[p, 0]), int(cnt[p, 1])
            mg = nbr[p, :n_mg].astype(np.int64)
            if mode == MODE_PREV:
                rg = _top(prev_cand, _corr(layout, tables, "g", p, prev_cand),
                          min(k, prev_cand.size)) if prev_cand.size else prev_cand[:0]
            else:
                rg = nbr[p, n_mg:n_mg + n_rg].astype(np.int64)

        mc_pool = same_cand[~np.isin(same_cand, mg)]
        mc = _top(mc_pool, _corr(layout, tables, "c", p, mc_pool),
                  min(k, mc_pool.size)) if mc_pool.size else mc_pool[:0]
        rc_pool = prev_cand[~np.isin(prev_cand, rg)]
        rc = _top(rc_pool, _corr(layout, tables, "c", p, rc_pool),
                  min(k, rc_pool.size)) if rc_pool.size else rc_pool[:0]

        sizes = (len(mg), len(rg), len(mc), len(rc))
        row = np.concatenate([mg, rg, mc, rc])
        nbr[p, :row.size] = row
        nbr[p, row.size:] = -1
        cnt[p] = sizes


def _pair_cov(layout: PointLayout, tables: KernelTables, sigma2: float,
              lam: float, tau2: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Marginal covariance between arbitrary point-id arrays (broadcast)."""
    u, v = np.broadcast_arrays(u, v)
    su = layout.pt_sig[u]
    sv = layout.pt_sig[v]
    tu = layout.pt_tidx[u].astype(np.int64)
    tv = layout.pt_tidx[v].astype(np.int64)
    du = np.abs(layout.pt_fidx[u] - layout.pt_fidx[v])
    T = layout.sig_T
    same = su == sv
    c2 = (~same) & (tables.prev_sig[sv] == su)
    c3 = (~same) & (tables.prev_sig[su] == sv)
    if not np.all(same | c2 | c3):
        raise KernelError("covariance requested between non-adjacent signals")

    def gather(mask, off, arr_A, arr_B, arr_Q):
        if tables.uniform:
            return arr_A[off] * arr_Q[off * layout.H + du[mask]]
        dh = np.abs(layout.freq[layout.pt_fidx[u[mask]]]
                    - layout.freq[layout.pt_fidx[v[mask]]])
        return arr_A[off] * np.exp(-arr_B[off] * dh)

    corr_g = np.empty(u.shape)
    corr_c = np.empty(u.shape)
    off = tables.same_off[su[same]] + tu[same] * T[su[same]] + tv[same]
    corr_g[same] = gather(same, off, tables.g_A_same, tables.g_B_same, tables.g_Q_same)
    corr_c[same] = gather(same, off, tables.c_A_same, tables.c_B_same, tables.c_Q_same)
    if c2.any():
        off = tables.prev_off[sv[c2]] + tu[c2] * T[sv[c2]] + tv[c2]
        corr_g[c2] = gather(c2, off, tables.g_A_prev, tables.g_B_prev, tables.g_Q_prev)
        corr_c[c2] = gather(c2, off, tables.c_A_prev, tables.c_B_prev, tables.c_Q_prev)
    if c3.any():
        off = tables.prev_off[su[c3]] + tv[c3] * T[su[c3]] + tu[c3]
        corr_g[c3] = gather(c3, off, tables.g_A_prev, tables.g_B_prev, tables.g_Q_prev)
        corr_c[c3] = gather(c3, off, tables.c_A_prev, tables.c_B_prev, tables.c_Q_prev)

    cov = sigma2 * (lam * corr_g + (1.0 - lam) * corr_c)
    nug = u == v
    if nug.any():
        cov[nug] += tau2[su[nug]]
    return cov


def eval_factors(layout: PointLayout, tables: KernelTables, sigma2: float,
                 lam: float, mu: np.ndarray, tau2: np.ndarray,
                 nbr: np.ndarray, cnt: np.ndarray, points: np.ndarray,
                 out: np.ndarray, jitter: float) -> int:
    """Conditional Gaussian log-density of each point given its neighbors.

    Writes one term per point into ``out``; returns the number of points
    whose neighbor covariance failed to factorize even after one jitter
    retry (those slots are set to NaN).
    """
    failures = 0
    for p in np.asarray(points, dtype=np.int64):
        s = int(layout.pt_sig[p])
        m = int(cnt[p].sum())
        var0 = sigma2 + tau2[s]
        if m == 0:
            r = layout.pt_y[p] - mu[s]
            out[p] = -0.5 * (_LOG_2PI + np.log(var0) + r * r / var0)
            continue
        ids = nbr[p, :m].astype(np.int64)
        S = _pair_cov(layout, tables, sigma2, lam, tau2, ids[:, None], ids[None, :])
        c = _pair_cov(layout, tables, sigma2, lam, tau2, np.full(m, p), ids)
        r = layout.pt_y[ids] - mu[layout.pt_sig[ids]]
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            try:
                L = np.linalg.cholesky(S + jitter * sigma2 * np.eye(m))
            except np.linalg.LinAlgError:
                out[p] = np.nan
                failures += 1
                continue
        from scipy.linalg import solve_triangular
        w = solve_triangular(L, r, lower=True, check_finite=False)
        v = solve_triangular(L, c, lower=True, check_finite=False)
        mean = mu[s] + v @ w
        var = var0 - v @ v
        if not var > 0:
            out[p] = np.nan
            failures += 1
            continue
        resid = layout.pt_y[p] - mean
        out[p] = -0.5 * (_LOG_2PI + np.log(var) + resid * resid / var)
    return failures
