# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled likelihood kernels: neighbor ranking and conditional factors.

Mirrors py_kernels semantics exactly; parallelized over points with OpenMP.
Each point's output is written independently, so results do not depend on
the thread count or schedule.
"""

from libc.math cimport exp, fabs, log, isnan, NAN
from cython.parallel cimport prange, threadid

from scipy.linalg.cython_blas cimport ddot, dtrsv
from scipy.linalg.cython_lapack cimport dpotrf

import numpy as np

NAME = "compiled"

MODE_FULL = 0
MODE_C_ONLY = 1
MODE_PREV = 2

cdef double LOG_2PI = 1.8378770664093453


ctypedef struct Tab:
    # layout
    int* pt_sig
    int* pt_tidx
    int* pt_fidx
    int* pt_local
    double* pt_y
    long long* sig_ptr
    int* sig_T
    long long* time_ptr
    long long* tp_off
    double* freq
    int H
    bint uniform
    # tables
    int* prev_sig
    long long* same_off
    long long* prev_off
    double* gAs
    double* gBs
    double* gQs
    double* cAs
    double* cBs
    double* cQs
    double* gAp
    double* gBp
    double* gQp
    double* cAp
    double* cBp
    double* cQp


cdef inline bint _worse(double ca, long long ia, double cb, long long ib) nogil:
    # ranking order: higher correlation wins, ties go to the smaller id
    if ca != cb:
        return ca < cb
    return ia > ib


cdef inline void _heap_up(double* hc, long long* hid, int i) nogil:
    cdef int par
    cdef double tc
    cdef long long ti
    while i > 0:
        par = (i - 1) >> 1
        if _worse(hc[i], hid[i], hc[par], hid[par]):
            tc = hc[i]; hc[i] = hc[par]; hc[par] = tc
            ti = hid[i]; hid[i] = hid[par]; hid[par] = ti
            i = par
        else:
            break


cdef inline void _heap_down(double* hc, long long* hid, int size) nogil:
    cdef int i = 0, l, r, w
    cdef double tc
    cdef long long ti
    while True:
        l = 2 * i + 1
        r = l + 1
        w = i
        if l < size and _worse(hc[l], hid[l], hc[w], hid[w]):
            w = l
        if r < size and _worse(hc[r], hid[r], hc[w], hid[w]):
            w = r
        if w == i:
            break
        tc = hc[i]; hc[i] = hc[w]; hc[w] = tc
        ti = hid[i]; hid[i] = hid[w]; hid[w] = ti
        i = w


cdef inline void _heap_push(double* hc, long long* hid, int* size, int cap,
                            double corr, long long c) nogil:
    if size[0] < cap:
        hc[size[0]] = corr
        hid[size[0]] = c
        size[0] += 1
        _heap_up(hc, hid, size[0] - 1)
    elif _worse(hc[0], hid[0], corr, c):
        hc[0] = corr
        hid[0] = c
        _heap_down(hc, hid, size[0])


cdef void _sort_best_first(double* hc, long long* hid, int size) nogil:
    # insertion sort by (correlation desc, id asc)
    cdef int i, j
    cdef double keyc
    cdef long long keyi
    for i in range(1, size):
        keyc = hc[i]
        keyi = hid[i]
        j = i - 1
        while j >= 0 and _worse(hc[j], hid[j], keyc, keyi):
            hc[j + 1] = hc[j]
            hid[j + 1] = hid[j]
            j -= 1
        hc[j + 1] = keyc
        hid[j + 1] = keyi


cdef void _scan(Tab* tb,
                double* gA, double* gB, double* gQ,
                double* cA, double* cB, double* cQ,
                bint use_g, bint use_c, bint monotone_g,
                long long cand0, long long cand1,
                long long base, long long coef, int fp,
                int kg, int kc,
                double* hcg, long long* hig, int* size_g,
                double* hcc, long long* hic, int* size_c) nogil:
    """One pass over a candidate region, filling up to two ranking heaps.

    Candidates form contiguous runs of equal time index sharing one table
    entry, visited latest time first. A run whose time factor (an upper
    bound on its correlations) cannot beat a full heap's root is skipped
    for that family; with ``monotone_g`` (same-signal region, where the
    shared-time factor decays monotonically into the past) that family is
    finished outright.
    """
    cdef long long r0, r1, off, c
    cdef int tc, dk
    cdef double Ag = 0.0, Ac = 0.0, corr, dh
    cdef double* qg
    cdef double* qc
    cdef bint push_g, push_c
    cdef int sg = 0, sc = 0
    cdef double root_g = -1.0, root_c = -1.0
    cdef long long rid_g = -1, rid_c = -1
    size_g[0] = 0
    size_c[0] = 0
    use_g = use_g and kg > 0
    use_c = use_c and kc > 0
    if not (use_g or use_c):
        return
    r1 = cand1
    while r1 > cand0 and (use_g or use_c):
        tc = tb.pt_tidx[r1 - 1]
        r0 = r1 - 1
        while r0 > cand0 and tb.pt_tidx[r0 - 1] == tc:
            r0 -= 1
        off = base + coef * <long long> tc
        push_g = use_g
        push_c = use_c
        if push_g:
            Ag = gA[off]
            if sg == kg and Ag < root_g:
                push_g = False
                if monotone_g:
                    use_g = False
        if push_c:
            Ac = cA[off]
            if sc == kc and Ac < root_c:
                push_c = False
        if push_g or push_c:
            qg = gQ + off * tb.H if tb.uniform else NULL
            qc = cQ + off * tb.H if tb.uniform else NULL
            for c in range(r0, r1):
                if tb.uniform:
                    dk = fp - tb.pt_fidx[c]
                    if dk < 0:
                        dk = -dk
                else:
                    dh = fabs(tb.freq[fp] - tb.freq[tb.pt_fidx[c]])
                if push_g:
                    corr = Ag * qg[dk] if tb.uniform else Ag * exp(-gB[off] * dh)
                    if sg < kg:
                        _heap_push(hcg, hig, &sg, kg, corr, c)
                        root_g = hcg[0]
                        rid_g = hig[0]
                    elif corr > root_g or (corr == root_g and c < rid_g):
                        hcg[0] = corr
                        hig[0] = c
                        _heap_down(hcg, hig, sg)
                        root_g = hcg[0]
                        rid_g = hig[0]
                if push_c:
                    corr = Ac * qc[dk] if tb.uniform else Ac * exp(-cB[off] * dh)
                    if sc < kc:
                        _heap_push(hcc, hic, &sc, kc, corr, c)
                        root_c = hcc[0]
                        rid_c = hic[0]
                    elif corr > root_c or (corr == root_c and c < rid_c):
                        hcc[0] = corr
                        hic[0] = c
                        _heap_down(hcc, hic, sc)
                        root_c = hcc[0]
                        rid_c = hic[0]
        r1 = r0
    size_g[0] = sg
    size_c[0] = sc
    _sort_best_first(hcg, hig, sg)
    _sort_best_first(hcc, hic, sc)


cdef void _scan_c_bucket(Tab* tb,
                         double* cA, double* cB, double* cQ,
                         long long cand0, long long cand1, int sig_cand,
                         long long base, long long coef, int fp, int jp,
                         int kc, int* dj_order, int n_dj,
                         double* hcc, long long* hic, int* size_c) nogil:
    """Circular-family ranking visiting time offsets in wrapped-distance
    order, which makes the run bound monotone: once a full heap's root
    beats a bucket's time factor, no later bucket can contribute."""
    cdef int sc = 0
    cdef double root_c = -1.0
    cdef long long rid_c = -1
    cdef int Tc = tb.sig_T[sig_cand]
    cdef long long tp0 = tb.tp_off[sig_cand]
    cdef int idx, dj, side, jc, dk, n_sides
    cdef long long off, r0, r1, c
    cdef double Ac, corr, dh, Amax
    cdef double* qc
    cdef int side_jc[2]
    cdef bint stop
    size_c[0] = 0
    if kc <= 0:
        return
    stop = False
    for idx in range(n_dj):
        dj = dj_order[idx]
        n_sides = 0
        if jp - dj >= 0 and jp - dj < Tc:
            side_jc[n_sides] = jp - dj
            n_sides += 1
        if dj > 0 and jp + dj >= 0 and jp + dj < Tc:
            side_jc[n_sides] = jp + dj
            n_sides += 1
        if n_sides == 0:
            continue
        # the two mirrored table entries are equal up to rounding; bound
        # the bucket by the larger one before pruning the rest of the order
        Amax = cA[base + coef * <long long> side_jc[0]]
        if n_sides == 2:
            Ac = cA[base + coef * <long long> side_jc[1]]
            if Ac > Amax:
                Amax = Ac
        if sc == kc and Amax < root_c:
            break
        for side in range(n_sides):
            jc = side_jc[side]
            off = base + coef * <long long> jc
            Ac = cA[off]
            r0 = tb.time_ptr[tp0 + jc]
            r1 = tb.time_ptr[tp0 + jc + 1]
            if r0 < cand0:
                r0 = cand0
            if r1 > cand1:
                r1 = cand1
            qc = cQ + off * tb.H if tb.uniform else NULL
            for c in range(r0, r1):
                if tb.uniform:
                    dk = fp - tb.pt_fidx[c]
                    if dk < 0:
                        dk = -dk
                    corr = Ac * qc[dk]
                else:
                    dh = fabs(tb.freq[fp] - tb.freq[tb.pt_fidx[c]])
                    corr = Ac * exp(-cB[off] * dh)
                if sc < kc:
                    _heap_push(hcc, hic, &sc, kc, corr, c)
                    root_c = hcc[0]
                    rid_c = hic[0]
                elif corr > root_c or (corr == root_c and c < rid_c):
                    hcc[0] = corr
                    hic[0] = c
                    _heap_down(hcc, hic, sc)
                    root_c = hcc[0]
                    rid_c = hic[0]
    size_c[0] = sc
    _sort_best_first(hcc, hic, sc)


cdef int _filter_take(double* hc, long long* hid, int size,
                      int* excl, int n_excl, int kk, int* out) nogil:
    """Copy up to kk heap entries (already best first) not present in excl."""
    cdef int i, j, taken = 0
    cdef bint skip
    for i in range(size):
        if taken >= kk:
            break
        skip = False
        for j in range(n_excl):
            if excl[j] == <int> hid[i]:
                skip = True
                break
        if not skip:
            out[taken] = <int> hid[i]
            taken += 1
    return taken


cdef inline double _pair_cov(Tab* tb, double sigma2, double lam,
                             double* tau2,
                             long long u, long long v) nogil:
    cdef int su = tb.pt_sig[u]
    cdef int sv = tb.pt_sig[v]
    cdef long long off
    cdef int dk
    cdef double qg, qc, dh, cov
    cdef double* gA
    cdef double* gB
    cdef double* gQ
    cdef double* cA
    cdef double* cB
    cdef double* cQ
    if su == sv:
        off = tb.same_off[su] + (<long long> tb.pt_tidx[u]) * tb.sig_T[su] + tb.pt_tidx[v]
        gA = tb.gAs; gB = tb.gBs; gQ = tb.gQs
        cA = tb.cAs; cB = tb.cBs; cQ = tb.cQs
    elif tb.prev_sig[sv] == su:
        off = tb.prev_off[sv] + (<long long> tb.pt_tidx[u]) * tb.sig_T[sv] + tb.pt_tidx[v]
        gA = tb.gAp; gB = tb.gBp; gQ = tb.gQp
        cA = tb.cAp; cB = tb.cBp; cQ = tb.cQp
    elif tb.prev_sig[su] == sv:
        off = tb.prev_off[su] + (<long long> tb.pt_tidx[v]) * tb.sig_T[su] + tb.pt_tidx[u]
        gA = tb.gAp; gB = tb.gBp; gQ = tb.gQp
        cA = tb.cAp; cB = tb.cBp; cQ = tb.cQp
    else:
        return NAN
    dk = tb.pt_fidx[u] - tb.pt_fidx[v]
    if dk < 0:
        dk = -dk
    if tb.uniform:
        qg = gQ[off * tb.H + dk]
        qc = cQ[off * tb.H + dk]
    else:
        dh = fabs(tb.freq[tb.pt_fidx[u]] - tb.freq[tb.pt_fidx[v]])
        qg = exp(-gB[off] * dh)
        qc = exp(-cB[off] * dh)
    cov = sigma2 * (lam * gA[off] * qg + (1.0 - lam) * cA[off] * qc)
    if u == v:
        cov += tau2[su]
    return cov


cdef Tab _make_tab(int[::1] pt_sig, int[::1] pt_tidx,
                   int[::1] pt_fidx, int[::1] pt_local,
                   double[::1] pt_y, long long[::1] sig_ptr,
                   int[::1] sig_T, long long[::1] time_ptr,
                   long long[::1] tp_off, double[::1] freq,
                   int H, bint uniform, int[::1] prev_sig,
                   long long[::1] same_off, long long[::1] prev_off,
                   double[::1] gAs, double[::1] gBs, double[::1] gQs,
                   double[::1] cAs, double[::1] cBs, double[::1] cQs,
                   double[::1] gAp, double[::1] gBp, double[::1] gQp,
                   double[::1] cAp, double[::1] cBp, double[::1] cQp):
    cdef Tab tb
    tb.pt_sig = &pt_sig[0]
    tb.pt_tidx = &pt_tidx[0]
    tb.pt_fidx = &pt_fidx[0]
    tb.pt_local = &pt_local[0]
    tb.pt_y = &pt_y[0]
    tb.sig_ptr = &sig_ptr[0]
    tb.sig_T = &sig_T[0]
    tb.time_ptr = &time_ptr[0]
    tb.tp_off = &tp_off[0]
    tb.freq = &freq[0]
    tb.H = H
    tb.uniform = uniform
    tb.prev_sig = &prev_sig[0]
    tb.same_off = &same_off[0]
    tb.prev_off = &prev_off[0]
    tb.gAs = &gAs[0]
    tb.gBs = &gBs[0]
    tb.cAs = &cAs[0]
    tb.cBs = &cBs[0]
    tb.gQs = NULL
    tb.cQs = NULL
    if gQs.shape[0] > 0:
        tb.gQs = &gQs[0]
        tb.cQs = &cQs[0]
    tb.gAp = NULL
    tb.gBp = NULL
    tb.gQp = NULL
    tb.cAp = NULL
    tb.cBp = NULL
    tb.cQp = NULL
    if gAp.shape[0] > 0:
        tb.gAp = &gAp[0]
        tb.gBp = &gBp[0]
        tb.cAp = &cAp[0]
        tb.cBp = &cBp[0]
        if gQp.shape[0] > 0:
            tb.gQp = &gQp[0]
            tb.cQp = &cQp[0]
    return tb


def rebuild_sets(int[::1] pt_sig, int[::1] pt_tidx,
                 int[::1] pt_fidx, int[::1] pt_local,
                 double[::1] pt_y, long long[::1] sig_ptr,
                 int[::1] sig_T, long long[::1] time_ptr,
                 long long[::1] tp_off, double[::1] freq,
                 int H, bint uniform, int[::1] prev_sig,
                 long long[::1] same_off, long long[::1] prev_off,
                 double[::1] gAs, double[::1] gBs, double[::1] gQs,
                 double[::1] cAs, double[::1] cBs, double[::1] cQs,
                 double[::1] gAp, double[::1] gBp, double[::1] gQp,
                 double[::1] cAp, double[::1] cBp, double[::1] cQp,
                 int k, long long[::1] points, int mode,
                 int[:, ::1] nbr, int[:, ::1] cnt,
                 double[:, ::1] heap_cg, long long[:, ::1] heap_ig,
                 double[:, ::1] heap_cc, long long[:, ::1] heap_ic,
                 int[:, ::1] grp_buf, int[::1] dj_order, int n_threads):
    cdef Tab tb = _make_tab(pt_sig, pt_tidx, pt_fidx, pt_local, pt_y, sig_ptr,
                            sig_T, time_ptr, tp_off, freq, H, uniform,
                            prev_sig, same_off, prev_off,
                            gAs, gBs, gQs, cAs, cBs, cQs,
                            gAp, gBp, gQp, cAp, cBp, cQp)
    cdef Py_ssize_t npts = points.shape[0]
    cdef Py_ssize_t ip
    cdef long long p, c0s, c0p, c1p
    cdef int s, tpi, fp, loc, pv, t
    cdef int nmg, nrg, nmc, nrc, i, pool, kg, kc, total
    cdef int sg, sc
    cdef long long base_same, base_prev
    cdef double* hcg
    cdef long long* hig
    cdef double* hcc
    cdef long long* hic
    cdef int* mg
    cdef int* rg
    cdef int* mc
    cdef int* rc
    cdef int width = nbr.shape[1]
    cdef int n_dj = <int> dj_order.shape[0]

    for ip in prange(npts, nogil=True, schedule='static', num_threads=n_threads):
        t = threadid()
        hcg = &heap_cg[t, 0]
        hig = &heap_ig[t, 0]
        hcc = &heap_cc[t, 0]
        hic = &heap_ic[t, 0]
        mg = &grp_buf[t, 0]
        rg = mg + k
        mc = rg + k
        rc = mc + k
        p = points[ip]
        s = tb.pt_sig[p]
        tpi = tb.pt_tidx[p]
        fp = tb.pt_fidx[p]
        loc = tb.pt_local[p]
        c0s = tb.sig_ptr[s]
        pv = tb.prev_sig[s]
        base_same = tb.same_off[s] + (<long long> tpi) * tb.sig_T[s]
        base_prev = tb.prev_off[s] + tpi
        if pv >= 0:
            c0p = tb.sig_ptr[pv]
            c1p = tb.sig_ptr[pv + 1]
        else:
            c0p = 0
            c1p = 0

        # ---- same-signal region: earlier points only
        pool = loc
        if mode == 0:
            kg = pool if pool < k else k
        else:
            # shared-time picks are kept: copy them out of the row first
            kg = cnt[p, 0]
            for i in range(kg):
                mg[i] = nbr[p, i]
        # the circular heap must survive the exclusion of the kept picks
        kc = k + kg
        if kc > pool:
            kc = pool
        sg = 0
        sc = 0
        if n_dj > 0:
            if mode == 0:
                _scan(&tb, tb.gAs, tb.gBs, tb.gQs, tb.cAs, tb.cBs, tb.cQs,
                      True, False, True, c0s, c0s + loc, base_same, 1, fp,
                      kg, 0, hcg, hig, &sg, hcc, hic, &sc)
            _scan_c_bucket(&tb, tb.cAs, tb.cBs, tb.cQs, c0s, c0s + loc, s,
                           base_same, 1, fp, tpi, kc, &dj_order[0], n_dj,
                           hcc, hic, &sc)
        else:
            _scan(&tb, tb.gAs, tb.gBs, tb.gQs, tb.cAs, tb.cBs, tb.cQs,
                  mode == 0, True, True, c0s, c0s + loc, base_same, 1, fp,
                  kg, kc, hcg, hig, &sg, hcc, hic, &sc)
        if mode == 0:
            nmg = sg
            for i in range(nmg):
                mg[i] = <int> hig[i]
        else:
            nmg = kg
        nmc = _filter_take(hcc, hic, sc, mg, nmg,
                           (pool - nmg) if (pool - nmg) < k else k, mc)

        # ---- predecessor region
        if pv >= 0:
            pool = <int> (c1p - c0p)
            if mode == 0 or mode == 2:
                kg = pool if pool < k else k
            else:
                kg = cnt[p, 1]
                for i in range(kg):
                    rg[i] = nbr[p, nmg + i]
            kc = k + kg
            if kc > pool:
                kc = pool
            sg = 0
            sc = 0
            if n_dj > 0:
                if mode == 0 or mode == 2:
                    _scan(&tb, tb.gAp, tb.gBp, tb.gQp, tb.cAp, tb.cBp, tb.cQp,
                          True, False, False, c0p, c1p,
                          base_prev, tb.sig_T[s], fp,
                          kg, 0, hcg, hig, &sg, hcc, hic, &sc)
                _scan_c_bucket(&tb, tb.cAp, tb.cBp, tb.cQp, c0p, c1p, pv,
                               base_prev, tb.sig_T[s], fp, tpi, kc,
                               &dj_order[0], n_dj, hcc, hic, &sc)
            else:
                _scan(&tb, tb.gAp, tb.gBp, tb.gQp, tb.cAp, tb.cBp, tb.cQp,
                      mode == 0 or mode == 2, True, False, c0p, c1p,
                      base_prev, tb.sig_T[s], fp,
                      kg, kc, hcg, hig, &sg, hcc, hic, &sc)
            if mode == 0 or mode == 2:
                nrg = sg
                for i in range(nrg):
                    rg[i] = <int> hig[i]
            else:
                nrg = kg
            nrc = _filter_take(hcc, hic, sc, rg, nrg,
                               (pool - nrg) if (pool - nrg) < k else k, rc)
        else:
            nrg = 0
            nrc = 0

        # ---- assemble the row: [Mg | Rg | Mc | Rc]
        total = 0
        for i in range(nmg):
            nbr[p, total] = mg[i]
            total = total + 1
        for i in range(nrg):
            nbr[p, total] = rg[i]
            total = total + 1
        for i in range(nmc):
            nbr[p, total] = mc[i]
            total = total + 1
        for i in range(nrc):
            nbr[p, total] = rc[i]
            total = total + 1
        cnt[p, 0] = nmg
        cnt[p, 1] = nrg
        cnt[p, 2] = nmc
        cnt[p, 3] = nrc
        for i in range(total, width):
            nbr[p, i] = -1


def eval_factors(int[::1] pt_sig, int[::1] pt_tidx,
                 int[::1] pt_fidx, int[::1] pt_local,
                 double[::1] pt_y, long long[::1] sig_ptr,
                 int[::1] sig_T, long long[::1] time_ptr,
                 long long[::1] tp_off, double[::1] freq,
                 int H, bint uniform, int[::1] prev_sig,
                 long long[::1] same_off, long long[::1] prev_off,
                 double[::1] gAs, double[::1] gBs, double[::1] gQs,
                 double[::1] cAs, double[::1] cBs, double[::1] cQs,
                 double[::1] gAp, double[::1] gBp, double[::1] gQp,
                 double[::1] cAp, double[::1] cBp, double[::1] cQp,
                 double sigma2, double lam,
                 double[::1] mu, double[::1] tau2,
                 int[:, ::1] nbr, int[:, ::1] cnt,
                 long long[::1] points,
                 double[::1] out, double jitter,
                 double[:, ::1] S_buf, double[:, ::1] c_buf, double[:, ::1] r_buf,
                 int n_threads):
    cdef Tab tb = _make_tab(pt_sig, pt_tidx, pt_fidx, pt_local, pt_y, sig_ptr,
                            sig_T, time_ptr, tp_off, freq, H, uniform,
                            prev_sig, same_off, prev_off,
                            gAs, gBs, gQs, cAs, cBs, cQs,
                            gAp, gBp, gQp, cAp, cBp, cQp)
    cdef Py_ssize_t npts = points.shape[0]
    cdef Py_ssize_t ip
    cdef long long p, ua, ub
    cdef int s, m, a, b, info, t, attempt
    cdef int inc = 1
    cdef double var0, var, mean, resid, v, mdot, vdot
    cdef double* S
    cdef double* cvec
    cdef double* rvec
    cdef double* tau2p = &tau2[0]
    cdef double* mup = &mu[0]
    cdef int fails = 0
    cdef bint bad

    for ip in prange(npts, nogil=True, schedule='static', num_threads=n_threads):
        t = threadid()
        S = &S_buf[t, 0]
        cvec = &c_buf[t, 0]
        rvec = &r_buf[t, 0]
        p = points[ip]
        s = tb.pt_sig[p]
        var0 = sigma2 + tau2p[s]
        m = cnt[p, 0] + cnt[p, 1] + cnt[p, 2] + cnt[p, 3]
        if m == 0:
            resid = tb.pt_y[p] - mup[s]
            out[p] = -0.5 * (LOG_2PI + log(var0) + resid * resid / var0)
            continue
        bad = False
        info = 0
        for attempt in range(2):
            for a in range(m):
                ua = nbr[p, a]
                for b in range(a, m):
                    ub = nbr[p, b]
                    v = _pair_cov(&tb, sigma2, lam, tau2p, ua, ub)
                    if isnan(v):
                        bad = True
                    S[a + b * m] = v
                    S[b + a * m] = v
                if attempt == 1:
                    S[a + a * m] = S[a + a * m] + jitter * sigma2
                cvec[a] = _pair_cov(&tb, sigma2, lam, tau2p, p, ua)
                rvec[a] = tb.pt_y[ua] - mup[tb.pt_sig[ua]]
            if bad:
                break
            dpotrf("L", &m, S, &m, &info)
            if info == 0:
                break
        if bad or info != 0:
            out[p] = NAN
            fails += 1
            continue
        dtrsv("L", "N", "N", &m, S, &m, cvec, &inc)
        dtrsv("L", "N", "N", &m, S, &m, rvec, &inc)
        mdot = ddot(&m, cvec, &inc, rvec, &inc)
        vdot = ddot(&m, cvec, &inc, cvec, &inc)
        var = var0 - vdot
        if var <= 0:
            out[p] = NAN
            fails += 1
            continue
        mean = mup[s] + mdot
        resid = tb.pt_y[p] - mean
        out[p] = -0.5 * (LOG_2PI + log(var) + resid * resid / var)
    return fails
