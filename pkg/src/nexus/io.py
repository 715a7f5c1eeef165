"""Configuration, data ingestion and result persistence.

Interchange format is CSV: mandatory header row, UTF-8, '.' decimal
separator, LF line endings.  Floats are written with shortest
round-trip precision so that identical runs produce byte-identical
files.  Every produced file starts with a '# config_hash=...' comment
tying it to the run configuration; readers in this package skip '#'
lines.
"""

import csv
import hashlib
import json
import os
from dataclasses import dataclass, fields

import numpy as np

from .errors import IngestionError, ParameterError
from .model import Hyperparameters, PanDataset, group_pairs, variable_pairs
from .posterior import (PathwayAnnotation, edge_probability_heatmap_data,
                        pathway_shared_proportions)
from .sampler import ChainTrace

__all__ = ["RunConfig", "load_dataset", "load_annotation", "save_trace",
           "load_trace", "persist_edge_report", "persist_similarity",
           "persist_pathways", "persist_heatmap", "persist_benchmark",
           "persist_prior_curves", "write_metadata", "write_matrix_csv",
           "config_hash"]

MODES = ("simulate", "fit", "select", "similarity", "pathways",
         "benchmark", "prior-curves")


@dataclass
class RunConfig:
    """Everything a CLI run needs; serializable to/from JSON.

    Hyperparameter keys are named identically to the Hyperparameters
    fields.  Path fields may stay None when the mode does not use them.
    """

    alpha1: float = 1.0
    beta1: float | None = None
    alpha2: float = 0.1
    beta2: float | None = None
    alpha_gamma: float = 1.0
    beta_gamma: float = 1.0
    delta: float = 0.0
    kappa: float = 0.05
    n_iterations: int = 20000
    n_burnin: int = 5000
    seed: int = 0
    independent_mode: bool = False
    mode: str = "fit"
    manifest: str | None = None
    trace: str | None = None
    annotation: str | None = None
    out: str = "."
    replicates: int = 10
    replicate_index: int = 0
    p: int = 20
    n: tuple = (20, 40, 60, 80)
    deltas: tuple = tuple(np.round(np.linspace(0.0, 1.0, 21), 3))
    kappa_grid: tuple | None = None
    standardize: bool = True
    full_trace: bool = False
    include_independent: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode '{self.mode}'; "
                                 f"expected one of {MODES}")

    def hyperparameters(self):
        return Hyperparameters(
            alpha1=self.alpha1, beta1=self.beta1, alpha2=self.alpha2,
            beta2=self.beta2, alpha_gamma=self.alpha_gamma,
            beta_gamma=self.beta_gamma, delta=self.delta, kappa=self.kappa,
            n_iterations=self.n_iterations, n_burnin=self.n_burnin,
            seed=self.seed, independent_mode=self.independent_mode)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(data)
        for key in ("n", "deltas", "kappa_grid"):
            if coerced.get(key) is not None:
                coerced[key] = tuple(coerced[key])
        return cls(**coerced)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise IngestionError(f"cannot read config: {exc}", path=path)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"config is not valid JSON: {exc}", path=path)
        return cls.from_dict(data)


def config_hash(config):
    """Stable short hash of a RunConfig (or plain dict).

    The output directory is excluded: it has no effect on results, and
    runs that differ only in where they write must stay byte-identical.
    """
    data = config.to_dict() if isinstance(config, RunConfig) else dict(config)
    data.pop("out", None)
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------

def _read_csv_rows(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = []
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if row and row[0].startswith("#"):
                    continue
                rows.append((lineno, row))
    except OSError as exc:
        raise IngestionError(f"cannot read file: {exc}", path=path)
    if not rows:
        raise IngestionError("file is empty", path=path)
    return rows


def load_dataset(manifest_path, standardize=True):
    """Build a PanDataset from a group manifest.

    The manifest is a CSV with header ``label,path`` and one group per
    row; relative paths resolve against the manifest's directory.  Each
    group file is a CSV whose header row holds the variable names and
    whose remaining rows hold one sample each.  All groups must agree on
    the header, rows must be rectangular and fully numeric, and each
    group needs at least 2 samples.
    """
    rows = _read_csv_rows(manifest_path)
    header = [h.strip().lower() for h in rows[0][1]]
    if header[:2] != ["label", "path"]:
        raise IngestionError(
            f"manifest header must be 'label,path', got {rows[0][1]}",
            path=manifest_path, line=rows[0][0])
    base = os.path.dirname(os.path.abspath(manifest_path))
    entries = []
    for lineno, row in rows[1:]:
        if len(row) < 2 or not row[0].strip() or not row[1].strip():
            raise IngestionError("manifest row needs 'label,path'",
                                 path=manifest_path, line=lineno)
        entries.append((row[0].strip(), os.path.join(base, row[1].strip())))
    if not entries:
        raise IngestionError("manifest lists no groups", path=manifest_path)

    groups = []
    names = None
    first_path = None
    for label, gpath in entries:
        grows = _read_csv_rows(gpath)
        head = [h.strip() for h in grows[0][1]]
        if len(head) < 2:
            raise IngestionError("need at least 2 variables", path=gpath,
                                 line=grows[0][0])
        if names is None:
            names = head
            first_path = gpath
        elif head != names:
            raise IngestionError(
                f"variable header differs from '{first_path}': "
                f"{head} vs {names}", path=gpath, line=grows[0][0])
        data = []
        for lineno, row in grows[1:]:
            if len(row) != len(names):
                raise IngestionError(
                    f"row has {len(row)} cells, expected {len(names)}",
                    path=gpath, line=lineno)
            vals = []
            for k, cell in enumerate(row):
                cell = cell.strip()
                if not cell:
                    raise IngestionError(
                        f"empty cell in column '{names[k]}'",
                        path=gpath, line=lineno)
                try:
                    v = float(cell)
                except ValueError:
                    raise IngestionError(
                        f"non-numeric cell {cell!r} in column '{names[k]}'",
                        path=gpath, line=lineno)
                if not np.isfinite(v):
                    raise IngestionError(
                        f"non-finite cell {cell!r} in column '{names[k]}'",
                        path=gpath, line=lineno)
                vals.append(v)
            data.append(vals)
        if len(data) < 2:
            raise IngestionError("group has fewer than 2 samples", path=gpath)
        groups.append((label, np.array(data)))
    return PanDataset(groups, variable_names=names, standardize=standardize)


def load_annotation(path, variable_names):
    """Parse a pathway annotation file.

    One pathway per line: name, then comma-separated variable names,
    resolved against the dataset's variable names.
    """
    rows = _read_csv_rows(path)
    index = {v: k for k, v in enumerate(variable_names)}
    pathways = []
    for lineno, row in rows:
        cells = [c.strip() for c in row if c.strip()]
        if not cells:
            continue
        name, members = cells[0], cells[1:]
        ids = []
        for m in members:
            if m not in index:
                raise IngestionError(
                    f"pathway '{name}' names unknown variable {m!r}",
                    path=path, line=lineno)
            ids.append(index[m])
        pathways.append((name, ids))
    if not pathways:
        raise IngestionError("annotation lists no pathways", path=path)
    return PathwayAnnotation(pathways, n_variables=len(variable_names))


# ---------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows, hash_):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_hash={hash_}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def save_trace(trace, path, hash_=""):
    """Serialize a ChainTrace to a numpy archive."""
    meta = {
        "p": trace.p, "n_groups": trace.n_groups, "labels": trace.labels,
        "variable_names": trace.variable_names, "kappa": trace.kappa,
        "n_iterations": trace.n_iterations, "n_burnin": trace.n_burnin,
        "n_kept": trace.n_kept, "independent_mode": trace.independent_mode,
        "min_pivot": trace.min_pivot, "config_hash": hash_,
    }
    arrays = {
        "exceed_counts": trace.exceed_counts,
        "mean_partial_corr": trace.mean_partial_corr,
        "mean_abs_partial_corr": trace.mean_abs_partial_corr,
        "mean_theta": trace.mean_theta,
        "lambda1_sq_draws": trace.lambda1_sq_draws,
        "lambda2_sq_draws": trace.lambda2_sq_draws,
        "gamma_draws": trace.gamma_draws,
        "meta_json": np.array(json.dumps(meta)),
    }
    if trace.kappa_grid is not None:
        arrays["kappa_grid"] = trace.kappa_grid
        arrays["grid_counts"] = trace.grid_counts
    if trace.theta_draws is not None:
        arrays["theta_draws"] = trace.theta_draws
    np.savez_compressed(path, **arrays)


def load_trace(path):
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta_json"]))
            kw = {k: z[k] for k in z.files if k != "meta_json"}
    except OSError as exc:
        raise IngestionError(f"cannot read trace: {exc}", path=str(path))
    return ChainTrace(
        p=meta["p"], n_groups=meta["n_groups"], labels=meta["labels"],
        variable_names=meta["variable_names"], kappa=meta["kappa"],
        n_iterations=meta["n_iterations"], n_burnin=meta["n_burnin"],
        n_kept=meta["n_kept"], independent_mode=meta["independent_mode"],
        exceed_counts=kw["exceed_counts"],
        mean_partial_corr=kw["mean_partial_corr"],
        mean_abs_partial_corr=kw["mean_abs_partial_corr"],
        mean_theta=kw["mean_theta"],
        lambda1_sq_draws=kw["lambda1_sq_draws"],
        lambda2_sq_draws=kw["lambda2_sq_draws"],
        gamma_draws=kw["gamma_draws"],
        min_pivot=meta["min_pivot"],
        kappa_grid=kw.get("kappa_grid"),
        grid_counts=kw.get("grid_counts"),
        theta_draws=kw.get("theta_draws"))


def persist_edge_report(report, outdir, hash_=""):
    """One edge-list CSV per group."""
    p = len(report.variable_names)
    iu = variable_pairs(p)
    paths = []
    for c, label in enumerate(report.labels):
        path = os.path.join(outdir, f"edges_{label}.csv")
        rows = []
        for e in range(iu[0].size):
            i, j = int(iu[0][e]), int(iu[1][e])
            rho = (report.mean_partial_corr[c, e]
                   if report.mean_partial_corr is not None else float("nan"))
            rows.append((i, j, report.variable_names[i],
                         report.variable_names[j],
                         float(report.inclusion_prob[c, e]),
                         bool(report.adjacency[c, e]), float(rho)))
        _write_csv(path, ["i", "j", "var_i", "var_j",
                          "inclusion_probability", "selected",
                          "mean_partial_correlation"], rows, hash_)
        paths.append(path)
    return paths


def persist_similarity(sim, outdir, hash_=""):
    path = os.path.join(outdir, "similarity.csv")
    rows = [(sim.labels[a], sim.labels[b], float(sim.nsi[k]),
             float(sim.nnsi[k]), float(sim.l1_distance[k]))
            for k, (a, b) in enumerate(sim.pairs)]
    _write_csv(path, ["group_a", "group_b", "nsi", "nnsi", "l1_distance"],
               rows, hash_)
    return path


def persist_pathways(report, annotation, outdir, hash_=""):
    """Shared-edge proportions for every group pair and pathway pair."""
    path = os.path.join(outdir, "pathway_proportions.csv")
    names = annotation.names
    rows = []
    for a, b in group_pairs(report.n_groups):
        table = pathway_shared_proportions(
            report.adjacency[a], report.adjacency[b], annotation)
        for i in range(len(names)):
            for j in range(i, len(names)):
                rows.append((report.labels[a], report.labels[b],
                             names[i], names[j], float(table[i, j])))
    _write_csv(path, ["group_a", "group_b", "pathway_a", "pathway_b",
                      "shared_proportion"], rows, hash_)
    return path


def persist_heatmap(report, outdir, hash_=""):
    matrix, edge_pairs, order = edge_probability_heatmap_data(report)
    path = os.path.join(outdir, "heatmap.csv")
    header = ["i", "j"] + [report.labels[c] for c in order]
    rows = [(i, j) + tuple(float(v) for v in matrix[r])
            for r, (i, j) in enumerate(edge_pairs)]
    _write_csv(path, header, rows, hash_)
    return path


def persist_benchmark(result, outdir, hash_=""):
    """Summary and per-replicate AUC tables."""
    summary = result.summary()
    rows = []
    for method, s in summary.items():
        for c, label in enumerate(result.labels):
            rows.append((method, label, float(s["per_graph_mean"][c]),
                         float(s["per_graph_sd"][c])))
    per_graph_path = os.path.join(outdir, "per_graph_auc.csv")
    _write_csv(per_graph_path, ["method", "group", "mean_auc", "sd_auc"],
               rows, hash_)

    rows = []
    for method, s in summary.items():
        for k, (a, b) in enumerate(result.pairs):
            rows.append((method, result.labels[a], result.labels[b],
                         float(s["shared_mean"][k]), float(s["shared_sd"][k])))
    shared_path = os.path.join(outdir, "shared_edge_auc.csv")
    _write_csv(shared_path, ["method", "group_a", "group_b", "mean_auc",
                             "sd_auc"], rows, hash_)

    rows = []
    for method in result.per_graph:
        pg = result.per_graph[method]
        sh = result.shared[method]
        for r in range(pg.shape[0]):
            for c, label in enumerate(result.labels):
                rows.append((r, method, label, float(pg[r, c])))
            for k, (a, b) in enumerate(result.pairs):
                rows.append((r, method,
                             f"{result.labels[a]}|{result.labels[b]}",
                             float(sh[r, k])))
    reps_path = os.path.join(outdir, "replicate_auc.csv")
    _write_csv(reps_path, ["replicate", "method", "target", "auc"], rows, hash_)
    return [per_graph_path, shared_path, reps_path]


def persist_prior_curves(curves, labels, outdir, hash_=""):
    path = os.path.join(outdir, "prior_means.csv")
    rows = []
    for t, d in enumerate(curves["delta"]):
        for c, label in enumerate(labels):
            rows.append((float(d), "within", label,
                         float(curves["within"][t, c])))
        for k, (a, b) in enumerate(curves["group_pairs"]):
            rows.append((float(d), "cross", f"{labels[a]}|{labels[b]}",
                         float(curves["cross"][t, k])))
    _write_csv(path, ["delta", "kind", "label", "prior_mean"], rows, hash_)
    return path


def write_metadata(config, outdir, wall_time=None, extra=None):
    """Run-metadata document: config echo, hash, timings, versions."""
    doc = {
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "numpy_version": np.__version__,
    }
    if wall_time is not None:
        doc["wall_time_seconds"] = round(float(wall_time), 3)
    if extra:
        doc.update(extra)
    path = os.path.join(outdir, "run_metadata.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_matrix_csv(path, matrix, variable_names, hash_=""):
    """Square matrix with variable-name header (re-ingestible layout)."""
    rows = [tuple(float(v) for v in row) for row in np.asarray(matrix)]
    _write_csv(path, list(variable_names), rows, hash_)
    return path
