"""Scikit-learn style estimator facade over the sampler.

``MultiGroupGraphicalLasso`` follows the fit-and-attributes convention
of sklearn's covariance estimators: hyperparameters go to __init__
(participating in get_params/set_params/clone), ``fit`` accepts the
multi-group data, and posterior summaries land in trailing-underscore
attributes.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ParameterError
from .model import Hyperparameters, PanDataset, variable_pairs
from .distributions import RngHandle
from .posterior import network_similarity, select_edges
from .sampler import run_chain

__all__ = ["MultiGroupGraphicalLasso", "as_pan_dataset"]


def as_pan_dataset(X, labels=None, variable_names=None, standardize=False):
    """Coerce user input into a PanDataset.

    Accepts an existing PanDataset (returned untouched), a list of
    2-d arrays (one per group, shared column count), or a single 3-d
    array of shape (C, n, p).
    """
    if isinstance(X, PanDataset):
        return X
    if isinstance(X, np.ndarray) and X.ndim == 3:
        X = list(X)
    if not isinstance(X, (list, tuple)) or len(X) == 0:
        raise ParameterError(
            "X must be a PanDataset, a nonempty list of 2-d arrays, or a "
            "3-d array of shape (n_groups, n_samples, n_variables)")
    if labels is None:
        labels = [f"group{c}" for c in range(len(X))]
    if len(labels) != len(X):
        raise ParameterError(f"got {len(labels)} labels for {len(X)} groups")
    return PanDataset(list(zip(labels, X)), variable_names=variable_names,
                      standardize=standardize)


class MultiGroupGraphicalLasso(BaseEstimator):
    """Joint sparse precision estimation across related groups.

    Fits one precision matrix per group with L1-style shrinkage within
    groups, fusion shrinkage between groups, and a sample-size
    correction so that smaller groups are not estimated systematically
    sparser.  Edge selection thresholds the posterior probability that
    an edge's |partial correlation| exceeds ``kappa``.

    Parameters mirror :class:`nexus.model.Hyperparameters`; ``beta1``
    and ``beta2`` default to the recommended data-driven scaling.

    Attributes (after fit)
    ----------------------
    precision_ : (C, p, p) posterior mean precision matrices
    partial_corr_ : (C, p, p) posterior mean partial correlations
    inclusion_probabilities_ : (C, E) edge inclusion probabilities
    adjacency_ : (C, E) boolean selected edges (canonical pair order)
    nsi_, nnsi_, l1_distance_ : pairwise similarity summaries
        (joint mode with at least two groups only)
    trace_ : the full ChainTrace
    """

    def __init__(self, alpha1=1.0, beta1=None, alpha2=0.1, beta2=None,
                 alpha_gamma=1.0, beta_gamma=1.0, delta=0.0, kappa=0.05,
                 n_iterations=20000, n_burnin=5000, seed=0,
                 independent_mode=False, standardize=False,
                 store_thetas=False):
        self.alpha1 = alpha1
        self.beta1 = beta1
        self.alpha2 = alpha2
        self.beta2 = beta2
        self.alpha_gamma = alpha_gamma
        self.beta_gamma = beta_gamma
        self.delta = delta
        self.kappa = kappa
        self.n_iterations = n_iterations
        self.n_burnin = n_burnin
        self.seed = seed
        self.independent_mode = independent_mode
        self.standardize = standardize
        self.store_thetas = store_thetas

    def _hyper(self):
        return Hyperparameters(
            alpha1=self.alpha1, beta1=self.beta1, alpha2=self.alpha2,
            beta2=self.beta2, alpha_gamma=self.alpha_gamma,
            beta_gamma=self.beta_gamma, delta=self.delta, kappa=self.kappa,
            n_iterations=self.n_iterations, n_burnin=self.n_burnin,
            seed=self.seed, independent_mode=self.independent_mode)

    def fit(self, X, y=None, labels=None, variable_names=None):
        """Run the chain on multi-group data and populate summaries."""
        data = as_pan_dataset(X, labels=labels, variable_names=variable_names,
                              standardize=self.standardize)
        hyper = self._hyper().resolved(data.sample_sizes)
        trace = run_chain(data, hyper, RngHandle(hyper.seed),
                          store_thetas=self.store_thetas)
        report = select_edges(trace, hyper.kappa)

        p = data.n_variables
        iu = variable_pairs(p)
        C = data.n_groups
        rho = np.tile(np.eye(p), (C, 1, 1))
        rho[:, iu[0], iu[1]] = trace.mean_partial_corr
        rho[:, iu[1], iu[0]] = trace.mean_partial_corr

        self.n_features_in_ = p
        self.labels_ = list(data.labels)
        self.variable_names_ = list(data.variable_names)
        self.trace_ = trace
        self.precision_ = trace.mean_theta
        self.partial_corr_ = rho
        self.inclusion_probabilities_ = report.inclusion_prob
        self.adjacency_ = report.adjacency
        self.lambda1_sq_ = trace.lambda1_sq_draws.mean(axis=0)
        self.gamma_ = np.atleast_1d(trace.gamma_draws.mean(axis=0))
        if not hyper.independent_mode and C >= 2:
            sim = network_similarity(trace)
            self.nsi_ = sim.nsi
            self.nnsi_ = sim.nnsi
            self.l1_distance_ = sim.l1_distance
        return self

    def edge_report(self, kappa=None):
        """EdgeReport at a possibly different threshold (see ChainTrace)."""
        self._check_fitted()
        return select_edges(self.trace_, kappa)

    def adjacency_matrix(self, group):
        """Selected edges of one group as a symmetric boolean matrix."""
        self._check_fitted()
        c = (self.labels_.index(group) if isinstance(group, str) else int(group))
        p = self.n_features_in_
        iu = variable_pairs(p)
        A = np.zeros((p, p), dtype=bool)
        A[iu] = self.adjacency_[c]
        return A | A.T

    def _check_fitted(self):
        if not hasattr(self, "trace_"):
            raise ParameterError("estimator is not fitted; call fit first")
