"""Command-line interface.

Every command is driven by flags plus an optional flat ``key = value``
config file (flags win). All randomness streams from one master seed,
split per (command, chain index) through numpy SeedSequence, so reruns
with the same inputs are reproducible byte for byte. The number of
parallel chain workers comes from the WARPGP_WORKERS environment
variable.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io as wio
from ._core import BACKEND
from .analysis import (
    CrossvalConfig,
    DistanceMatrix,
    crossval_score,
    quadratic_distance,
    upgma_tree,
)
from .grids import FrequencyGrid
from .mcmc import (
    FitConfig,
    mcmc_run,
    read_chain,
    remap_identifiable,
    summarize_samples,
    write_chain,
    write_summary,
)
from .nngp import NngpConfig
from .prediction import ShapeRequest, sample_shape, shape_summary
from .priors import PriorConfig
from .simulate import SimConfig, generate

logger = logging.getLogger("warpgp")

_COMMAND_CODES = {"simulate": 1, "fit": 2, "predict-shape": 3, "distance": 4,
                  "tree": 5, "crossval": 6, "summarize": 7}

_VARIANT_LABELS = {"full": "Our", "no-warp": "NoWarp", "no-circ": "NoCirc",
                   "no-align": "NoAl"}


def _rng_for(seed: int, command: str, chain: int = 0) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed,
                               spawn_key=(_COMMAND_CODES[command], chain)))


def _prior_config(opts: dict) -> PriorConfig:
    kwargs = {}
    for f in PriorConfig.__dataclass_fields__:
        key = f"prior.{f}"
        if key in opts:
            kwargs[f] = None if opts[key] == "none" else float(opts[key])
    return PriorConfig(**kwargs)


def _load_opts(args) -> dict:
    opts = {}
    if getattr(args, "config", None):
        opts.update(wio.load_flat_config(args.config))
    return opts


def _opt(args, opts, name, cast, default):
    v = getattr(args, name.replace(".", "_").replace("-", "_"), None)
    if v is not None:
        return v
    if name in opts:
        return cast(opts[name])
    return default


def _cmd_simulate(args) -> int:
    opts = _load_opts(args)
    seed = _opt(args, opts, "seed", int, 0)
    n = _opt(args, opts, "signals", int, 15)
    source = _opt(args, opts, "source", str, "fixed")
    cfg = SimConfig(n_signals=n, source=source)
    ds, truth = generate(cfg, _rng_for(seed, "simulate"))
    out = Path(args.out)
    wio.save_dataset(out / "data", ds)
    truth.save(out / "truth.json")
    logger.info("wrote %d signals (%d points) under %s", ds.n_signals, ds.n, out)
    return 0


def _fit_one(payload):
    (data_dir, chain_idx, seed, iters, burnin, thin, k, priors, out_dir,
     backend) = payload
    ds = wio.load_dataset(data_dir)
    cfg = FitConfig(
        priors=priors, nngp=NngpConfig(k=k), backend=backend,
        stream_path=str(Path(out_dir) / f"chain_{chain_idx}.jsonl"))
    rng = _rng_for(seed, "fit", chain_idx)
    samples = mcmc_run(ds, cfg, None, rng, iters, burnin, thin)
    return chain_idx, samples, tuple(float(s.length) for s in ds.signals)


def _cmd_fit(args) -> int:
    opts = _load_opts(args)
    seed = _opt(args, opts, "seed", int, 0)
    iters = _opt(args, opts, "iters", int, 60000)
    burnin = _opt(args, opts, "burnin", int, 4800)
    thin = _opt(args, opts, "thin", int, 6)
    k = _opt(args, opts, "k", int, 10)
    chains = _opt(args, opts, "chains", int, 1)
    priors = _prior_config(opts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payloads = [(args.data, c, seed, iters, burnin, thin, k, priors, out,
                 args.backend) for c in range(chains)]
    workers = int(os.environ.get("WARPGP_WORKERS", "1"))
    results = []
    if chains > 1 and workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_fit_one, payloads))
    else:
        results = [_fit_one(p) for p in payloads]
    all_samples = []
    for chain_idx, samples, lengths in sorted(results):
        write_chain(out / f"chain_{chain_idx}.jsonl", samples, lengths, k)
        all_samples.extend(samples)
    remapped = [remap_identifiable(s) for s in all_samples]
    write_summary(out / "summary.txt", summarize_samples(remapped))
    logger.info("fit complete: %d retained samples over %d chain(s)",
                len(all_samples), chains)
    return 0


def _cmd_summarize(args) -> int:
    samples = read_chain(args.chain)
    remapped = [remap_identifiable(s) for s in samples]
    write_summary(args.out, summarize_samples(remapped))
    return 0


def _cmd_predict_shape(args) -> int:
    opts = _load_opts(args)
    seed = _opt(args, opts, "seed", int, 0)
    ds = wio.load_dataset(args.data)
    samples = [remap_identifiable(s) for s in read_chain(args.chain)]
    length = _opt(args, opts, "length", float, None)
    if length is None:
        length = float(np.median([s.length for s in ds.signals]))
    step = _opt(args, opts, "step", float, 0.01)
    m_cond = _opt(args, opts, "m-cond", int, 40)
    priors = _prior_config(opts)
    request = ShapeRequest(length=length, step=step, freq=ds.freq,
                           m_cond=None if m_cond < 0 else m_cond)
    draws = sample_shape(samples, ds, request, _rng_for(seed, "predict-shape"),
                         b_zeta=priors.b_zeta, b_delta=priors.b_delta)
    mean, var = shape_summary(draws)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    label = ds.species_label or "species"
    grid_hdr = {"time_step": step, "freq": request.freq}
    _write_shape(out / f"shape_mean_{label}.txt", mean, grid_hdr)
    _write_shape(out / f"shape_var_{label}.txt", var, grid_hdr)
    if args.save_draws:
        import json
        with open(out / f"shape_draws_{label}.jsonl", "w") as f:
            for d in draws:
                f.write(json.dumps({"sample": d.sample_index,
                                    "zeta": d.xi.zeta, "delta": d.xi.delta,
                                    "values": d.values.tolist()}) + "\n")
    logger.info("shape written for %s on a %s grid", label, mean.shape)
    return 0


def _write_shape(path, matrix, hdr) -> None:
    from .grids import Spectrogram, TimeGrid
    spec = Spectrogram(id=0, time=TimeGrid(matrix.shape[0], hdr["time_step"]),
                       freq=hdr["freq"], values=matrix)
    wio.save_spectrogram(path, spec)


def _cmd_distance(args) -> int:
    shapes = [wio.load_spectrogram(p) for p in args.shapes]
    labels = args.labels or [f"S{i + 1}" for i in range(len(shapes))]
    if len(labels) != len(shapes):
        raise SystemExit("need one label per shape file")
    n = len(shapes)
    vals = np.zeros((n, n))
    for i in range(n):
        for j in range(i):
            vals[i, j] = vals[j, i] = quadratic_distance(
                shapes[i].values, shapes[j].values,
                (shapes[i].time.coords(), shapes[i].freq.values),
                (shapes[j].time.coords(), shapes[j].freq.values))
    lines = ["label " + " ".join(labels)]
    for i in range(n):
        lines.append(labels[i] + " " + " ".join(f"{v:.10g}" for v in vals[i]))
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def _read_distance(path) -> DistanceMatrix:
    lines = Path(path).read_text().splitlines()
    labels = lines[0].split()[1:]
    vals = np.array([[float(v) for v in ln.split()[1:]] for ln in lines[1:]])
    return DistanceMatrix(labels=tuple(labels), values=vals)


def _cmd_tree(args) -> int:
    d = _read_distance(args.distances)
    Path(args.out).write_text(upgma_tree(d) + "\n")
    return 0


def _cmd_crossval(args) -> int:
    opts = _load_opts(args)
    seed = _opt(args, opts, "seed", int, 0)
    fraction = _opt(args, opts, "fraction", float, 0.05)
    iters = _opt(args, opts, "iters", int, 2000)
    burnin = _opt(args, opts, "burnin", int, 400)
    thin = _opt(args, opts, "thin", int, 4)
    k = _opt(args, opts, "k", int, 10)
    ds = wio.load_dataset(args.data)
    cfg = CrossvalConfig(fraction=fraction, seed=seed, n_iter=iters,
                         burn_in=burnin, thin=thin, k=k,
                         priors=_prior_config(opts), backend=args.backend)
    score = crossval_score(ds, args.variant, cfg, _rng_for(seed, "crossval"))
    label = _VARIANT_LABELS[args.variant]
    report = Path(args.out)
    rows = {}
    if report.exists():
        for ln in report.read_text().splitlines()[1:]:
            key, val = ln.split()
            rows[key] = val
    rows[label] = f"{score:.6g}"
    cols = [v for v in _VARIANT_LABELS.values() if v in rows]
    lines = ["variant crps"] + [f"{c} {rows[c]}" for c in cols]
    report.write_text("\n".join(lines) + "\n")
    print(f"{label} {score:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="warpgp",
        description="Hierarchical GP modelling of spectrogram collections "
                    f"(likelihood backend: {BACKEND})")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--signals", type=int)
    p.add_argument("--source", choices=["fixed", "sampled"])
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="run the sampler on a dataset directory")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iters", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--backend", choices=["compiled", "python"])
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("summarize", help="quantile summary of a chain file")
    p.add_argument("--chain", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("predict-shape", help="posterior representative sound")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--length", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--m-cond", type=int, dest="m_cond")
    p.add_argument("--save-draws", action="store_true")
    p.set_defaults(func=_cmd_predict_shape)

    p = sub.add_parser("distance", help="quadratic distances between shapes")
    p.add_argument("--shapes", nargs="+", required=True)
    p.add_argument("--labels", nargs="*")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("tree", help="average-linkage tree from a distance file")
    p.add_argument("--distances", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tree)

    p = sub.add_parser("crossval", help="holdout CRPS for one model variant")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", required=True,
                   choices=["full", "no-warp", "no-circ", "no-align"])
    p.add_argument("--fraction", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--backend", choices=["compiled", "python"])
    p.set_defaults(func=_cmd_crossval)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # surface a clean diagnostic, nonzero exit
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
