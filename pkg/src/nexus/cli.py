"""Command-line interface.

Subcommands: simulate, fit, select, similarity, pathways, benchmark,
prior-curves.  Every subcommand accepts ``--config <json>`` plus flag
overrides (flags win).  Exit code 0 on success; nonzero with a single
machine-parsable ``error: <Type>: <message>`` line on stderr otherwise.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import io as nio
from .distributions import RngHandle
from .errors import IngestionError, NumericalError, ParameterError
from .model import prior_mean_curves
from .posterior import network_similarity, select_edges
from .sampler import run_chain
from .simulation import generate_dataset, simulate_truths
from .evaluation import replicate_experiment, worker_count


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _float_list(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="nexus",
        description="Joint Bayesian network estimation across groups "
                    "with unequal sample sizes")
    sub = parser.add_subparsers(dest="mode", required=True)

    def add_common(sp, hyper=True):
        sp.add_argument("--config", help="JSON config file; flags override")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        if hyper:
            sp.add_argument("--alpha1", type=float)
            sp.add_argument("--beta1", type=float)
            sp.add_argument("--alpha2", type=float)
            sp.add_argument("--beta2", type=float)
            sp.add_argument("--alpha-gamma", dest="alpha_gamma", type=float)
            sp.add_argument("--beta-gamma", dest="beta_gamma", type=float)
            sp.add_argument("--delta", type=float)
            sp.add_argument("--kappa", type=float)
            sp.add_argument("--iterations", dest="n_iterations", type=int)
            sp.add_argument("--burnin", dest="n_burnin", type=int)

    sp = sub.add_parser("simulate", help="emit simulation truths and data")
    add_common(sp, hyper=False)
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=_int_list, help="comma-separated sizes")
    sp.add_argument("--replicate", dest="replicate_index", type=int,
                    help="which benchmark replicate's data to emit")

    sp = sub.add_parser("fit", help="run a chain on ingested data")
    add_common(sp)
    sp.add_argument("--manifest", help="CSV manifest: label,path per group")
    sp.add_argument("--independent", dest="independent_mode",
                    action="store_true", default=None)
    sp.add_argument("--standardize", dest="standardize", action="store_true",
                    default=None)
    sp.add_argument("--no-standardize", dest="standardize",
                    action="store_false", default=None)
    sp.add_argument("--kappa-grid", dest="kappa_grid", type=_float_list)
    sp.add_argument("--full-trace", dest="full_trace", action="store_true",
                    default=None)

    sp = sub.add_parser("select", help="edge reports from a saved trace")
    add_common(sp, hyper=False)
    sp.add_argument("--trace")
    sp.add_argument("--kappa", type=float)

    sp = sub.add_parser("similarity", help="pairwise similarity indices")
    add_common(sp, hyper=False)
    sp.add_argument("--trace")

    sp = sub.add_parser("pathways", help="pathway shared-edge proportions")
    add_common(sp, hyper=False)
    sp.add_argument("--trace")
    sp.add_argument("--annotation")
    sp.add_argument("--kappa", type=float)

    sp = sub.add_parser("benchmark", help="replicated simulate-fit-score")
    add_common(sp)
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=_int_list)
    sp.add_argument("--no-independent", dest="include_independent",
                    action="store_false", default=None)

    sp = sub.add_parser("prior-curves", help="prior means over a delta grid")
    add_common(sp)
    sp.add_argument("--n", type=_int_list)
    sp.add_argument("--deltas", type=_float_list)
    return parser


def _merge(args):
    """Layer config-file values under explicit flags."""
    base = nio.RunConfig(mode=args.mode).to_dict()
    if getattr(args, "config", None):
        base.update(nio.RunConfig.from_file(args.config).to_dict())
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        base[key] = value
    base["mode"] = args.mode
    return nio.RunConfig.from_dict(base)


def _outdir(cfg):
    try:
        os.makedirs(cfg.out, exist_ok=True)
    except OSError as exc:
        raise IngestionError(f"cannot create output directory: {exc}",
                             path=cfg.out)
    return cfg.out


def _require(cfg, attr, flag):
    value = getattr(cfg, attr)
    if not value:
        raise ParameterError(f"{cfg.mode} requires {flag}")
    return value


def _cmd_simulate(cfg):
    outdir = _outdir(cfg)
    h = nio.config_hash(cfg)
    rng = RngHandle(cfg.seed).derive(cfg.replicate_index, 0)
    truths = simulate_truths(rng, p=cfg.p)
    data = generate_dataset(rng, truths, n=cfg.n)
    manifest_rows = []
    for c, label in enumerate(data.labels):
        nio.write_matrix_csv(os.path.join(outdir, f"truth_{label}.csv"),
                             truths.thetas[c], data.variable_names, h)
        data_path = f"data_{label}.csv"
        nio.write_matrix_csv(os.path.join(outdir, data_path),
                             data.matrices[c], data.variable_names, h)
        manifest_rows.append((label, data_path))
    nio._write_csv(os.path.join(outdir, "manifest.csv"), ["label", "path"],
                   manifest_rows, h)
    rows = [(data.labels[a], data.labels[b],
             float(truths.shared_edge_proportions[k]))
            for k, (a, b) in enumerate(zip(*np.triu_indices(len(cfg.n), 1)))]
    nio._write_csv(os.path.join(outdir, "shared_edge_proportions.csv"),
                   ["group_a", "group_b", "proportion"], rows, h)
    return {"groups": data.labels, "p": cfg.p}


def _cmd_fit(cfg):
    outdir = _outdir(cfg)
    manifest = _require(cfg, "manifest", "--manifest")
    data = nio.load_dataset(manifest, standardize=cfg.standardize)
    hyper = cfg.hyperparameters().resolved(data.sample_sizes)
    trace = run_chain(data, hyper, RngHandle(hyper.seed),
                      kappa_grid=cfg.kappa_grid,
                      store_thetas=cfg.full_trace)
    trace_path = os.path.join(outdir, "trace.npz")
    nio.save_trace(trace, trace_path, nio.config_hash(cfg))
    return {"trace": trace_path, "groups": data.labels,
            "n": data.sample_sizes, "p": data.n_variables,
            "min_cholesky_pivot": trace.min_pivot}


def _cmd_select(cfg):
    outdir = _outdir(cfg)
    trace = nio.load_trace(_require(cfg, "trace", "--trace"))
    report = select_edges(trace, cfg.kappa)
    h = nio.config_hash(cfg)
    paths = nio.persist_edge_report(report, outdir, h)
    paths.append(nio.persist_heatmap(report, outdir, h))
    return {"files": [os.path.basename(p) for p in paths]}


def _cmd_similarity(cfg):
    outdir = _outdir(cfg)
    trace = nio.load_trace(_require(cfg, "trace", "--trace"))
    sim = network_similarity(trace)
    path = nio.persist_similarity(sim, outdir, nio.config_hash(cfg))
    return {"files": [os.path.basename(path)]}


def _cmd_pathways(cfg):
    outdir = _outdir(cfg)
    trace = nio.load_trace(_require(cfg, "trace", "--trace"))
    annotation = nio.load_annotation(
        _require(cfg, "annotation", "--annotation"), trace.variable_names)
    report = select_edges(trace, cfg.kappa)
    path = nio.persist_pathways(report, annotation, outdir,
                                nio.config_hash(cfg))
    return {"files": [os.path.basename(path)]}


def _cmd_benchmark(cfg):
    outdir = _outdir(cfg)
    result = replicate_experiment(
        cfg.hyperparameters(), n_replicates=cfg.replicates, p=cfg.p,
        n=cfg.n, include_independent=cfg.include_independent,
        max_workers=worker_count())
    paths = nio.persist_benchmark(result, outdir, nio.config_hash(cfg))
    summary = result.summary()
    return {"files": [os.path.basename(p) for p in paths],
            "per_graph_auc": {m: [round(float(x), 4)
                                  for x in s["per_graph_mean"]]
                              for m, s in summary.items()}}


def _cmd_prior_curves(cfg):
    outdir = _outdir(cfg)
    curves = prior_mean_curves(cfg.n, cfg.deltas, cfg.hyperparameters())
    labels = [f"C{k + 1}" for k in range(len(cfg.n))]
    path = nio.persist_prior_curves(curves, labels, outdir,
                                    nio.config_hash(cfg))
    return {"files": [os.path.basename(path)]}


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "select": _cmd_select,
    "similarity": _cmd_similarity,
    "pathways": _cmd_pathways,
    "benchmark": _cmd_benchmark,
    "prior-curves": _cmd_prior_curves,
}


def cli_dispatch(argv=None):
    """Parse argv, run the subcommand, return a process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge(args)
        start = time.perf_counter()
        extra = _COMMANDS[cfg.mode](cfg)
        nio.write_metadata(cfg, cfg.out,
                           wall_time=time.perf_counter() - start,
                           extra=extra)
    except (ParameterError, IngestionError, NumericalError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
