"""Posterior summaries: edge selection, network similarity, pathways.

All functions here are pure consumers of a ChainTrace (or plain
arrays); nothing mutates its inputs.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import leaves_list, linkage
from scipy.spatial.distance import pdist

from .errors import NumericalError, ParameterError, UnsupportedOperationError
from .model import group_pairs, variable_pairs

__all__ = [
    "EdgeReport",
    "SimilarityReport",
    "PathwayAnnotation",
    "partial_correlations",
    "select_edges",
    "network_similarity",
    "pathway_shared_proportions",
    "edge_probability_heatmap_data",
]


@dataclass
class EdgeReport:
    """Per-group edge inclusion probabilities and selected adjacencies.

    ``inclusion_prob[c, e]`` is the posterior probability that edge e's
    |partial correlation| exceeds kappa in group c; an edge is selected
    when that probability strictly exceeds 0.5.
    """

    inclusion_prob: np.ndarray   # (C, E) in [0, 1]
    adjacency: np.ndarray        # (C, E) bool
    kappa: float
    labels: list
    variable_names: list
    mean_partial_corr: np.ndarray | None = None  # (C, E)

    @property
    def n_groups(self):
        return self.inclusion_prob.shape[0]

    def adjacency_matrix(self, c):
        """Selected edges of group c as a symmetric boolean p x p matrix."""
        p = len(self.variable_names)
        iu = variable_pairs(p)
        A = np.zeros((p, p), dtype=bool)
        A[iu] = self.adjacency[c]
        return A | A.T


@dataclass
class SimilarityReport:
    """Pairwise similarity summaries over canonical group pairs."""

    labels: list
    pairs: list                 # canonical (a, b) index tuples
    nsi: np.ndarray             # posterior mean squared fusion weight
    nnsi: np.ndarray            # nsi min-max mapped to [0, 1]
    l1_distance: np.ndarray     # entrywise L1 between posterior mean precisions
    degenerate: bool = False


class PathwayAnnotation:
    """Named, possibly overlapping sets of variable indices."""

    def __init__(self, pathways, n_variables):
        self.pathways = []
        for name, members in pathways:
            members = sorted(set(int(m) for m in members))
            if members and (members[0] < 0 or members[-1] >= n_variables):
                raise ParameterError(
                    f"pathway '{name}' has variable indices outside "
                    f"[0, {n_variables})")
            self.pathways.append((str(name), members))
        self.n_variables = n_variables

    @property
    def names(self):
        return [name for name, _ in self.pathways]


def partial_correlations(theta):
    """Partial correlation matrix of a positive definite precision matrix.

    rho_ij = -theta_ij / sqrt(theta_ii * theta_jj), diagonal set to 1.
    """
    theta = np.asarray(theta, dtype=float)
    try:
        np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        raise NumericalError("input matrix is not positive definite")
    d = np.sqrt(np.diag(theta))
    rho = -theta / np.outer(d, d)
    np.fill_diagonal(rho, 1.0)
    return rho


def select_edges(trace, kappa=None):
    """Threshold a trace into an EdgeReport.

    An edge's inclusion probability is the fraction of retained draws
    whose |partial correlation| strictly exceeds kappa; edges with
    probability strictly above 0.5 are selected.
    """
    if trace.n_kept <= 0:
        raise ParameterError("trace holds no retained draws")
    if kappa is None:
        kappa = trace.kappa
    if not 0.0 < kappa < 1.0:
        raise ParameterError(f"kappa must lie in (0, 1), got {kappa}")
    prob = trace.inclusion_probabilities(kappa)
    return EdgeReport(
        inclusion_prob=prob,
        adjacency=prob > 0.5,
        kappa=float(kappa),
        labels=list(trace.labels),
        variable_names=list(trace.variable_names),
        mean_partial_corr=trace.mean_partial_corr.copy())


def network_similarity(trace):
    """Pairwise similarity indices from a joint-mode trace.

    The similarity index for a pair is the posterior mean of its squared
    fusion weight; the normalized index maps the lowest pair to 0 and
    the highest to 1.  The L1 distance is the entrywise absolute
    difference between posterior mean precision matrices.
    """
    if trace.independent_mode:
        raise UnsupportedOperationError(
            "similarity indices are undefined for an independent-mode run "
            "(no cross-group fusion weights were sampled)")
    pairs = group_pairs(trace.n_groups)
    if not pairs:
        raise ParameterError("similarity needs at least two groups")
    nsi = trace.lambda2_sq_draws.mean(axis=0)
    spread = nsi.max() - nsi.min()
    degenerate = len(pairs) < 2 or spread == 0.0
    if degenerate:
        warnings.warn(
            "normalized similarity is undefined for a single pair or "
            "all-equal indices; emitting zeros", stacklevel=2)
        nnsi = np.zeros_like(nsi)
    else:
        nnsi = (nsi - nsi.min()) / spread
    l1 = np.array([np.abs(trace.mean_theta[a] - trace.mean_theta[b]).sum()
                   for a, b in pairs])
    return SimilarityReport(
        labels=list(trace.labels), pairs=pairs, nsi=nsi, nnsi=nnsi,
        l1_distance=l1, degenerate=degenerate)


def pathway_shared_proportions(adjacency_a, adjacency_b, annotation):
    """Proportion of shared selected edges within and across pathways.

    For pathway pair (P, Q) the numerator counts edges with one
    endpoint in P and the other in Q selected in BOTH groups; the
    denominator counts such edges selected in AT LEAST ONE group.  An
    empty denominator (or empty pathway) yields 0.

    Returns a (n_pathways, n_pathways) symmetric matrix aligned with
    ``annotation.names``.
    """
    A = np.asarray(adjacency_a, dtype=bool)
    B = np.asarray(adjacency_b, dtype=bool)
    if A.shape != B.shape:
        raise ParameterError("adjacencies must share shape")
    p = annotation.n_variables
    if A.ndim == 1:
        iu = variable_pairs(p)
        full = np.zeros((p, p), dtype=bool)
        full[iu] = A
        A = full | full.T
        full = np.zeros((p, p), dtype=bool)
        full[iu] = B
        B = full | full.T
    n = len(annotation.pathways)
    out = np.zeros((n, n))
    masks = []
    for name, members in annotation.pathways:
        if not members:
            warnings.warn(f"pathway '{name}' is empty; its proportions are 0",
                          stacklevel=2)
        mask = np.zeros(p, dtype=bool)
        mask[members] = True
        masks.append(mask)
    both = A & B
    either = A | B
    for i in range(n):
        for j in range(i, n):
            block = np.outer(masks[i], masks[j]) | np.outer(masks[j], masks[i])
            block &= ~np.eye(p, dtype=bool)
            denom = (either & block).sum() // 2
            shared = (both & block).sum() // 2
            out[i, j] = out[j, i] = shared / denom if denom else 0.0
    return out


def edge_probability_heatmap_data(report):
    """Plot-ready matrix for a heatmap of posterior edge probabilities.

    Rows are the edges selected in at least one group; columns are the
    groups, ordered by average-linkage hierarchical clustering on the
    Euclidean distance between the groups' probability columns.

    Returns (matrix, edge_index_pairs, column_order).
    """
    prob = np.asarray(report.inclusion_prob, dtype=float)
    adjacency = np.asarray(report.adjacency, dtype=bool)
    p = len(report.variable_names)
    iu = variable_pairs(p)
    keep = adjacency.any(axis=0)
    rows = prob[:, keep].T
    edge_pairs = list(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
    C = prob.shape[0]
    if C <= 2 or rows.shape[0] == 0:
        order = list(range(C))
    else:
        dist = pdist(rows.T, metric="euclidean")
        order = leaves_list(linkage(dist, method="average")).tolist()
    return rows[:, order], edge_pairs, order
