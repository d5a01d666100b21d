import numpy as np
import pytest

from warpgp import (
    LatticePoint,
    NngpConfig,
    Permutation,
    build_cov_matrix,
    build_neighbor_sets,
    gneiting_circular,
    gneiting_shared,
    nngp_loglik,
    permute_proposal,
    synchronize,
)
from warpgp.grids import point_ref

from conftest import APPENDIX_GLOBALS, toy_dataset, toy_params


def lattice_points(ds):
    pts = []
    for i, s in enumerate(ds.signals):
        for j in range(s.time.count):
            for kf in range(len(s.freq)):
                pts.append(LatticePoint(
                    signal=i + 1, time_index=j + 1, freq_index=kf + 1,
                    t=j * s.time.step, h=float(s.freq.values[kf])))
    return pts


def brute_force_sets(ds, perm, params, k):
    """Oracle: rank all candidates by direct kernel evaluation.

    On a uniform frequency grid, pairs with equal index distance are exact
    mathematical ties, so the oracle measures frequency distance as
    step * |index difference| (naive coordinate subtraction would break
    those ties by one ulp and scramble the documented id tie-break).
    """
    pts = lattice_points(ds)
    n = len(pts)
    lengths = {i + 1: s.length for i, s in enumerate(ds.signals)}
    sync = params.sync_map()
    g = params.globals_
    fstep = ds.freq.uniform_step

    def dh(a, b):
        if fstep is not None:
            return fstep * abs(a.freq_index - b.freq_index)
        return abs(a.h - b.h)

    def corr_g(a, b):
        dd = abs(synchronize(a.t, sync[a.signal], lengths[a.signal])
                 - synchronize(b.t, sync[b.signal], lengths[b.signal]))
        return gneiting_shared(dd, dh(a, b), g)

    def corr_c(a, b):
        return gneiting_circular(abs(a.t - b.t), dh(a, b), g)

    order = list(perm.order)
    prev_of = {order[i]: order[i - 1] for i in range(1, len(order))}
    counts = np.array([s.n_active for s in ds.signals])
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    groups = []
    for p in range(n):
        a = pts[p]
        sig = a.signal
        loc = p - starts[sig - 1]
        same = list(range(starts[sig - 1], starts[sig - 1] + loc))
        prev = []
        if sig in prev_of:
            ps = prev_of[sig]
            prev = list(range(starts[ps - 1], starts[ps - 1] + counts[ps - 1]))

        def top(cands, fn, kk, excl=()):
            cands = [c for c in cands if c not in excl]
            ranked = sorted(cands, key=lambda c: (-fn(a, pts[c]), c))
            return tuple(ranked[:kk])

        mg = top(same, corr_g, min(k, loc))
        rg = top(prev, corr_g, min(k, len(prev)))
        mc = top(same, corr_c, min(k, len(same) - len(mg)), excl=set(mg))
        rc = top(prev, corr_c, min(k, len(prev) - len(rg)), excl=set(rg))
        groups.append((mg, rg, mc, rc))
    return groups


def test_first_point_has_no_neighbors():
    ds = toy_dataset(n_signals=2, bins=3, t_counts=(3, 4))
    params = toy_params(ds)
    sets = build_neighbor_sets(ds, Permutation((2, 1)), params, NngpConfig(k=3))
    first = ds.signals[0].n_active  # signal 2 leads under this ordering
    assert sets.groups(first) == ((), (), (), ())
    assert sets.neighbors(first + 1) == (first,)


def test_sets_match_bruteforce_oracle():
    ds = toy_dataset(n_signals=2, bins=2, t_counts=(2, 3), seed=5)
    params = toy_params(ds, seed=5)
    for order in [(1, 2), (2, 1)]:
        for k in (1, 2, 7):
            perm = Permutation(order)
            sets = build_neighbor_sets(ds, perm, params, NngpConfig(k=k))
            oracle = brute_force_sets(ds, perm, params, k)
            for p in range(ds.n):
                assert sets.groups(p) == oracle[p], f"point {p}, k={k}"


def test_sets_match_bruteforce_oracle_larger():
    ds = toy_dataset(n_signals=3, bins=4, t_counts=(5, 4, 6), seed=9)
    params = toy_params(ds, seed=9)
    perm = Permutation((3, 1, 2))
    sets = build_neighbor_sets(ds, perm, params, NngpConfig(k=4))
    oracle = brute_force_sets(ds, perm, params, 4)
    for p in range(ds.n):
        assert sets.groups(p) == oracle[p]


def test_group_disjointness_and_budgets(rng):
    ds = toy_dataset(n_signals=3, bins=5, t_counts=(6, 5, 7), seed=3)
    params = toy_params(ds, seed=3)
    k = 4
    sets = build_neighbor_sets(ds, Permutation((2, 3, 1)), params,
                               NngpConfig(k=k))
    for p in range(ds.n):
        mg, rg, mc, rc = sets.groups(p)
        assert len(mg) <= k and len(rg) <= k and len(mc) <= k and len(rc) <= k
        g_side = set(mg) | set(rg)
        c_side = set(mc) | set(rc)
        assert not (g_side & c_side)
        loc = p - {0: 0}.get(p, 0)  # local index check via point_ref
        ref = point_ref(p, ds)
        assert len(mg) <= min(k, ds.signals[ref.signal - 1].n_active)


def exact_mvn_loglik(ds, params):
    pts = lattice_points(ds)
    lengths = {i + 1: s.length for i, s in enumerate(ds.signals)}
    cov = build_cov_matrix(pts, params.globals_, params.sync_map(), lengths,
                           params.nuis_map())
    y = np.concatenate([s.values.ravel() for s in ds.signals])
    mu = np.concatenate([np.full(s.n_active, params.signals[i].nuis.mu)
                         for i, s in enumerate(ds.signals)])
    L = np.linalg.cholesky(cov)
    z = np.linalg.solve(L, y - mu)
    return float(-0.5 * len(y) * np.log(2 * np.pi)
                 - np.log(np.diag(L)).sum() - 0.5 * z @ z)


def test_saturation_matches_dense_mvn():
    # all permissible conditioning points kept: the factorization is exact
    # when every signal can see all its predecessors (N <= 2)
    ds = toy_dataset(n_signals=2, bins=5, t_counts=(7, 8), seed=11)
    params = toy_params(ds, seed=11)
    for order in [(1, 2), (2, 1)]:
        perm = Permutation(order)
        sets = build_neighbor_sets(ds, perm, params, NngpConfig(k=100))
        got = nngp_loglik(ds, params, sets)
        want = exact_mvn_loglik(ds, params)
        assert abs(got - want) / abs(want) < 1e-8


def test_empty_set_term_is_marginal_density():
    ds = toy_dataset(n_signals=1, bins=2, t_counts=(2,), seed=2)
    params = toy_params(ds, seed=2)
    perm = Permutation((1,))
    sets = build_neighbor_sets(ds, perm, params, NngpConfig(k=1))
    # evaluate a dataset consisting of just the first point
    from warpgp import Dataset, Spectrogram, TimeGrid, FrequencyGrid, validate_dataset
    y0 = float(ds.signals[0].values[0, 0])
    sp = params.signals[0]
    var = params.globals_.sigma2 + sp.nuis.tau2
    expect0 = -0.5 * (np.log(2 * np.pi * var) + (y0 - sp.nuis.mu) ** 2 / var)
    # component of the full factorization attributable to the first point:
    # difference of logliks of nested prefixes is awkward; instead check a
    # one-point dataset directly
    one = validate_dataset(Dataset(signals=(Spectrogram(
        id=1, time=TimeGrid(2), freq=ds.signals[0].freq,
        values=ds.signals[0].values,
        mask=np.array([[True, False], [False, False]])),)))
    sets1 = build_neighbor_sets(one, perm, params, NngpConfig(k=1))
    assert nngp_loglik(one, params, sets1) == pytest.approx(expect0, rel=1e-12)


def test_error_nonincreasing_in_k():
    ds = toy_dataset(n_signals=2, bins=4, t_counts=(5, 5), seed=21)
    params = toy_params(ds, seed=21)
    perm = Permutation((1, 2))
    want = exact_mvn_loglik(ds, params)
    errs = []
    for k in (1, 2, 5, 10, 100):
        sets = build_neighbor_sets(ds, perm, params, NngpConfig(k=k))
        errs.append(abs(nngp_loglik(ds, params, sets) - want))
    assert all(errs[i + 1] <= errs[i] + 1e-9 for i in range(len(errs) - 1))
    assert errs[-1] / abs(want) < 1e-8


def test_determinism():
    ds = toy_dataset(n_signals=2, bins=4, t_counts=(5, 6), seed=4)
    params = toy_params(ds, seed=4)
    perm = Permutation((2, 1))
    a = build_neighbor_sets(ds, perm, params, NngpConfig(k=3))
    b = build_neighbor_sets(ds, perm, params, NngpConfig(k=3))
    assert np.array_equal(a.nbr, b.nbr) and np.array_equal(a.cnt, b.cnt)
    assert nngp_loglik(ds, params, a) == nngp_loglik(ds, params, b)


def test_permute_proposal():
    rng = np.random.default_rng(0)
    p2 = Permutation((1, 2))
    assert permute_proposal(p2, rng).order == (2, 1)
    p1 = Permutation((1,))
    assert permute_proposal(p1, rng).order == (1,)
    # one transposition exactly
    p5 = Permutation((1, 2, 3, 4, 5))
    for _ in range(50):
        q = permute_proposal(p5, rng)
        diff = [i for i in range(5) if q.order[i] != p5.order[i]]
        assert len(diff) == 2
        i, j = diff
        assert q.order[i] == p5.order[j] and q.order[j] == p5.order[i]
    # fixed-seed golden proposal, recorded at build time
    assert permute_proposal(p5, np.random.default_rng(42)).order == (5, 2, 3, 4, 1)


def test_permutation_validation():
    with pytest.raises(ValueError):
        Permutation((1, 3))
    with pytest.raises(ValueError):
        Permutation((0, 1))
