"""Joint Bayesian estimation of sparse Gaussian graphical models across
groups with unequal sample sizes.

The public surface: a scikit-learn style estimator
(:class:`MultiGroupGraphicalLasso`), the underlying sampler
(:func:`run_chain`), posterior summaries (edge selection, network
similarity, pathway sharing), the structured simulation generator, the
ROC/AUC evaluation harness, and a CLI (``nexus``).
"""

from .errors import (IngestionError, NumericalError, ParameterError,
                     UnsupportedOperationError)
from .model import (Hyperparameters, PanDataset, effective_sample_sizes,
                    group_pairs, hyperprior_rates, prior_mean_curves,
                    variable_pairs)
from .distributions import (RngHandle, sample_gamma, sample_inverse_gaussian,
                            sample_mvn_from_precision)
from .sampler import ChainTrace, GibbsSampler, run_chain, run_prior_chain
from .posterior import (EdgeReport, PathwayAnnotation, SimilarityReport,
                        edge_probability_heatmap_data, network_similarity,
                        partial_correlations, pathway_shared_proportions,
                        select_edges)
from .simulation import (SimTruth, build_theta1, generate_dataset,
                         make_positive_definite, perturb_chain,
                         simulate_truths)
from .evaluation import (BenchmarkResult, replicate_experiment, roc_auc,
                         shared_edge_auc, threshold_sweep)
from .estimator import MultiGroupGraphicalLasso, as_pan_dataset

__version__ = "0.1.0"
