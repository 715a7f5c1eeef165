"""Scoring of estimated networks against known truths.

The continuous score for ROC purposes is the posterior mean absolute
partial correlation per edge, the same statistic the kappa-threshold
selection machinery operates on.  Shared-edge recovery for a pair of
groups scores min(score_a, score_b) against the both-present labels.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ParameterError
from .distributions import RngHandle
from .model import Hyperparameters, group_pairs
from .posterior import select_edges
from .sampler import run_chain
from .simulation import generate_dataset, simulate_truths

__all__ = ["ScoreSet", "roc_auc", "shared_edge_auc", "threshold_sweep",
           "replicate_experiment", "BenchmarkResult", "worker_count"]


@dataclass
class ScoreSet:
    """Per-edge continuous scores with their ground-truth labels."""

    scores: np.ndarray   # (C, E) nonnegative
    truth: np.ndarray    # (C, E) bool

    def __post_init__(self):
        if self.scores.shape != self.truth.shape:
            raise ParameterError("scores and truth must share shape")
        if np.any(self.scores < 0):
            raise ParameterError("scores must be nonnegative")


def roc_auc(scores, truth):
    """Area under the ROC curve by midrank (handles ties exactly).

    Equals the probability that a uniformly chosen positive outranks a
    uniformly chosen negative, counting ties as half.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ParameterError(
            f"degenerate truth: {n_pos} positives, {n_neg} negatives")
    r = rankdata(scores)
    return float((r[truth].sum() - n_pos * (n_pos + 1) / 2.0)
                 / (n_pos * n_neg))


def shared_edge_auc(scores_a, scores_b, truth_a, truth_b):
    """AUC for recovering edges present in BOTH true graphs.

    The pair score for an edge is the smaller of the two group scores,
    so an edge ranks high only when both groups support it.
    """
    scores_a = np.asarray(scores_a, dtype=float)
    scores_b = np.asarray(scores_b, dtype=float)
    if scores_a.shape != scores_b.shape:
        raise ParameterError("score vectors must share shape")
    labels = np.asarray(truth_a, dtype=bool) & np.asarray(truth_b, dtype=bool)
    return roc_auc(np.minimum(scores_a, scores_b), labels)


def _confusion_rates(selected, truth):
    tp = int((selected & truth).sum())
    fp = int((selected & ~truth).sum())
    fn = int((~selected & truth).sum())
    tn = int((~selected & ~truth).sum())
    tpr = tp / (tp + fn) if tp + fn else 0.0
    fpr = fp / (fp + tn) if fp + tn else 0.0
    denom = np.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = ((tp * tn - fp * fn) / denom) if denom > 0 else 0.0
    return tpr, fpr, mcc


def threshold_sweep(trace, truth, kappas):
    """TPR / FPR / MCC per group across a grid of selection thresholds.

    The trace must have recorded exceedance counts on the grid (pass it
    as ``kappa_grid`` to the chain) or carry full precision draws.

    Returns a list of row dicts: group, kappa, tpr, fpr, mcc.
    """
    truth = np.asarray(truth, dtype=bool)
    rows = []
    for kappa in np.asarray(kappas, dtype=float):
        report = select_edges(trace, kappa)
        for c in range(trace.n_groups):
            tpr, fpr, mcc = _confusion_rates(report.adjacency[c], truth[c])
            rows.append({"group": trace.labels[c], "kappa": float(kappa),
                         "tpr": tpr, "fpr": fpr, "mcc": mcc})
    return rows


# ---------------------------------------------------------------------
# replicated benchmark
# ---------------------------------------------------------------------

@dataclass
class BenchmarkResult:
    """Replicate-level and aggregated AUCs for joint and independent fits."""

    labels: list
    pairs: list
    per_graph: dict      # method -> (R, C) array
    shared: dict         # method -> (R, P) array

    def summary(self):
        """method -> dict with mean/sd arrays for per-graph and shared AUC."""
        out = {}
        for method in self.per_graph:
            pg = self.per_graph[method]
            sh = self.shared[method]
            out[method] = {
                "per_graph_mean": pg.mean(axis=0), "per_graph_sd": pg.std(axis=0),
                "shared_mean": sh.mean(axis=0), "shared_sd": sh.std(axis=0),
            }
        return out


def worker_count():
    """Worker cap: NEXUS_THREADS if set, else the machine's CPU count."""
    env = os.environ.get("NEXUS_THREADS", "").strip()
    if env:
        try:
            k = int(env)
        except ValueError:
            raise ParameterError(f"NEXUS_THREADS must be an integer, got {env!r}")
        if k < 1:
            raise ParameterError("NEXUS_THREADS must be >= 1")
        return k
    return os.cpu_count() or 1


def _one_replicate(args):
    (rep, hyper_kwargs, p, n, run_independent, master_seed) = args
    data_rng = RngHandle(master_seed).derive(rep, 0)
    truths = simulate_truths(data_rng, p=p)
    data = generate_dataset(data_rng, truths, n=n)
    out = {}
    base = Hyperparameters(**hyper_kwargs).resolved(n)
    modes = [("nexus", False, 1)]
    if run_independent:
        modes.append(("independent", True, 2))
    for method, indep, stream in modes:
        hyper = Hyperparameters(**{**base.__dict__, "independent_mode": indep})
        trace = run_chain(data, hyper, RngHandle(master_seed).derive(rep, stream))
        scored = ScoreSet(scores=trace.edge_scores(), truth=truths.adjacency)
        pg = [roc_auc(scored.scores[c], scored.truth[c])
              for c in range(len(n))]
        sh = [shared_edge_auc(scored.scores[a], scored.scores[b],
                              scored.truth[a], scored.truth[b])
              for a, b in group_pairs(len(n))]
        out[method] = (pg, sh)
    return rep, out


def replicate_experiment(hyper, n_replicates=10, p=20, n=(20, 40, 60, 80),
                         include_independent=True, max_workers=None):
    """Simulate, fit and score ``n_replicates`` data sets.

    Replicate r derives its data stream from (seed, r, 0), its joint
    chain from (seed, r, 1) and its independent chain from (seed, r, 2),
    so results are deterministic for a given master seed regardless of
    how many workers execute them, and the joint and independent fits of
    a replicate always see identical data.
    """
    if n_replicates < 1:
        raise ParameterError("need at least one replicate")
    hyper_kwargs = dict(hyper.__dict__)
    jobs = [(rep, hyper_kwargs, p, tuple(n), include_independent, hyper.seed)
            for rep in range(n_replicates)]
    if max_workers is None:
        max_workers = worker_count()
    max_workers = min(max_workers, n_replicates)
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_one_replicate, jobs))
    else:
        results = [_one_replicate(j) for j in jobs]
    results.sort(key=lambda t: t[0])

    labels = [f"C{k + 1}" for k in range(len(n))]
    pairs = group_pairs(len(n))
    methods = ["nexus"] + (["independent"] if include_independent else [])
    per_graph = {m: np.array([r[1][m][0] for r in results]) for m in methods}
    shared = {m: np.array([r[1][m][1] for r in results]) for m in methods}
    return BenchmarkResult(labels=labels, pairs=pairs,
                           per_graph=per_graph, shared=shared)
