"""Core model types and closed-form prior quantities.

The model: C groups of observations over a common set of p variables,
each group c following N_p(0, inverse(Theta_c)) with its own sparse
precision matrix Theta_c.  Diagonal entries carry independent
exponential priors with rate gamma (gamma itself gamma-distributed);
off-diagonal entries carry a joint shrinkage prior with a within-group
L1 term weighted by lambda1 per group and a cross-group fusion term
weighted by lambda2 per group pair.  The squared shrinkage weights get
gamma priors whose rates are corrected for unequal sample sizes through
the effective sample size n_e = nbar**delta * n**(1 - delta).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "Hyperparameters",
    "PanDataset",
    "PenaltyState",
    "LatentScales",
    "ChainState",
    "variable_pairs",
    "group_pairs",
    "pair_rank",
    "effective_sample_sizes",
    "hyperprior_rates",
    "prior_mean_lambda1_sq",
    "prior_mean_lambda2_sq",
    "prior_mean_curves",
]


# ---------------------------------------------------------------------
# canonical pair indexing
# ---------------------------------------------------------------------
# Flat storage over unordered pairs uses lexicographic order over (a, b)
# with a < b, i.e. the order produced by numpy.triu_indices(n, 1).  All
# pair-indexed arrays in the package (variable pairs and group pairs)
# follow this one convention so traces are comparable across runs.

def variable_pairs(p):
    """Return (rows, cols) index arrays for the p*(p-1)/2 canonical pairs."""
    return np.triu_indices(p, 1)


def group_pairs(n_groups):
    """List of canonical (c, c') tuples with c < c'."""
    a, b = np.triu_indices(n_groups, 1)
    return list(zip(a.tolist(), b.tolist()))


def pair_rank(a, b, n):
    """Flat index of unordered pair (a, b) among the canonical pairs of n items."""
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise ParameterError(f"invalid pair ({a}, {b}) for n={n}")
    if a > b:
        a, b = b, a
    return a * n - a * (a + 1) // 2 + (b - a - 1)


# ---------------------------------------------------------------------
# hyperparameters
# ---------------------------------------------------------------------

@dataclass(frozen=True)
class Hyperparameters:
    """All tunable quantities of the model and sampler.

    ``beta1`` and ``beta2`` may be None, in which case they are resolved
    at fit time to the recommended scaling 0.1 * nbar**2 and nbar**2
    respectively (nbar = mean group sample size).
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

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "alpha_gamma", "beta_gamma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be strictly positive, got {v}")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be strictly positive or None, got {v}")
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterError(f"delta must lie in [0, 1], got {self.delta}")
        if not 0.0 < self.kappa < 1.0:
            raise ParameterError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.n_iterations <= 0 or self.n_burnin < 0:
            raise ParameterError("iteration counts must be positive")
        if self.n_burnin >= self.n_iterations:
            raise ParameterError(
                f"n_burnin ({self.n_burnin}) must be smaller than "
                f"n_iterations ({self.n_iterations})")
        if int(self.seed) < 0:
            raise ParameterError("seed must be a nonnegative integer")

    def resolved(self, n):
        """Return a copy with beta1/beta2 filled in from the sample sizes."""
        nbar = float(np.mean(n))
        b1 = self.beta1 if self.beta1 is not None else 0.1 * nbar**2
        b2 = self.beta2 if self.beta2 is not None else nbar**2
        if b1 == self.beta1 and b2 == self.beta2:
            return self
        return Hyperparameters(**{**self.__dict__, "beta1": b1, "beta2": b2})


# ---------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------

class PanDataset:
    """C centered data matrices over a shared variable set.

    Each group holds an n_c x p matrix; all groups share p and the
    variable ordering.  Columns are centered to mean zero at
    construction (the model assumes mean-zero data).  With
    ``standardize=True`` columns are also scaled to unit sample
    variance, which is the recommended treatment for real data;
    simulated data drawn from the model itself is left unscaled.
    """

    def __init__(self, groups, variable_names=None, standardize=False):
        if len(groups) < 1:
            raise ParameterError("need at least one group")
        labels = []
        mats = []
        for label, mat in groups:
            labels.append(str(label))
            mats.append(np.array(mat, dtype=float))
        p = mats[0].shape[1] if mats[0].ndim == 2 else -1
        if p < 2:
            raise ParameterError("need at least 2 variables")
        for label, m in zip(labels, mats):
            if m.ndim != 2 or m.shape[1] != p:
                raise ParameterError(
                    f"group '{label}' has shape {m.shape}; expected (*, {p})")
            if m.shape[0] < 2:
                raise ParameterError(f"group '{label}' has fewer than 2 samples")
            if not np.all(np.isfinite(m)):
                raise ParameterError(f"group '{label}' contains non-finite values")
        if variable_names is None:
            variable_names = [f"v{j}" for j in range(p)]
        variable_names = [str(v) for v in variable_names]
        if len(variable_names) != p:
            raise ParameterError(
                f"got {len(variable_names)} variable names for p={p}")

        centered = []
        for label, m in zip(labels, mats):
            m = m - m.mean(axis=0)
            if standardize:
                sd = m.std(axis=0, ddof=1)
                if np.any(sd == 0):
                    j = int(np.argmax(sd == 0))
                    raise ParameterError(
                        f"group '{label}' column '{variable_names[j]}' is "
                        "constant; cannot standardize")
                m = m / sd
            m.setflags(write=False)
            centered.append(m)

        self.labels = labels
        self.matrices = centered
        self.variable_names = variable_names

    @property
    def n_groups(self):
        return len(self.matrices)

    @property
    def n_variables(self):
        return self.matrices[0].shape[1]

    @property
    def sample_sizes(self):
        return [m.shape[0] for m in self.matrices]

    def scatter_matrices(self):
        """Per-group X'X, the sufficient statistics for the likelihood."""
        return [m.T @ m for m in self.matrices]

    def __repr__(self):
        return (f"PanDataset(C={self.n_groups}, p={self.n_variables}, "
                f"n={self.sample_sizes})")


# ---------------------------------------------------------------------
# sampler state containers
# ---------------------------------------------------------------------

@dataclass
class PenaltyState:
    """Current shrinkage weights: lambda1_sq per group, lambda2_sq per
    canonical group pair, and the diagonal exponential rate gamma
    (a length-C vector in independent mode, length 1 otherwise)."""

    lambda1_sq: np.ndarray
    lambda2_sq: np.ndarray
    gamma: np.ndarray

    def validate(self):
        for name in ("lambda1_sq", "lambda2_sq", "gamma"):
            v = getattr(self, name)
            if v.size and not np.all(v > 0):
                raise ParameterError(f"{name} must stay strictly positive")


@dataclass
class LatentScales:
    """Latent variances of the normal scale-mixture representation.

    tau_sq has shape (C, p*(p-1)/2): one scale per group per variable
    pair.  omega_sq has shape (C*(C-1)/2, p*(p-1)/2): one scale per
    group pair per variable pair.  Both follow the canonical pair order.
    """

    tau_sq: np.ndarray
    omega_sq: np.ndarray

    def validate(self):
        if self.tau_sq.size and not np.all(self.tau_sq > 0):
            raise ParameterError("tau_sq must stay strictly positive")
        if self.omega_sq.size and not np.all(self.omega_sq > 0):
            raise ParameterError("omega_sq must stay strictly positive")


@dataclass
class ChainState:
    """Everything a Gibbs sweep mutates: the C precision matrices plus
    latent scales and penalty weights.  Owned by exactly one chain."""

    thetas: np.ndarray          # (C, p, p), each symmetric positive definite
    latents: LatentScales
    penalties: PenaltyState

    def min_cholesky_pivot(self):
        """Smallest Cholesky pivot across groups; > 0 iff all PD."""
        worst = np.inf
        for c in range(self.thetas.shape[0]):
            try:
                piv = np.diag(np.linalg.cholesky(self.thetas[c])).min()
            except np.linalg.LinAlgError:
                return -np.inf
            worst = min(worst, float(piv))
        return worst


# ---------------------------------------------------------------------
# closed-form prior quantities
# ---------------------------------------------------------------------

def effective_sample_sizes(n, delta):
    """Interpolated sample sizes nbar**delta * n_c**(1 - delta).

    delta = 0 leaves the raw sizes; delta = 1 replaces every size with
    the group mean; intermediate values trade off between the two.
    """
    n = np.asarray(n, dtype=float)
    if n.ndim != 1 or n.size == 0:
        raise ParameterError("n must be a nonempty 1-d sequence")
    if np.any(n < 1):
        raise ParameterError("all sample sizes must be >= 1")
    if not 0.0 <= delta <= 1.0:
        raise ParameterError(f"delta must lie in [0, 1], got {delta}")
    nbar = n.mean()
    return nbar**delta * n**(1.0 - delta)


def hyperprior_rates(n_eff, beta1, beta2):
    """Sample-size-corrected gamma rates for the squared shrinkage weights.

    Returns (beta1_c, beta2_cc) with
        beta1_c[c]   = beta1 / n_eff[c]**2
        beta2_cc[k]  = beta2 * ((n_a + n_b) / (2 n_a n_b))**2
    over canonical group pairs k = (a, b).  Dividing by the squared
    (harmonic-mean style) sizes gives groups with more data a larger
    prior mean shrinkage weight, which counteracts the tendency of
    larger samples to produce denser estimated graphs.
    """
    n_eff = np.asarray(n_eff, dtype=float)
    if np.any(n_eff <= 0) or beta1 <= 0 or beta2 <= 0:
        raise ParameterError("n_eff, beta1 and beta2 must be positive")
    beta1_c = beta1 / n_eff**2
    pairs = group_pairs(n_eff.size)
    beta2_cc = np.array([
        beta2 * ((n_eff[a] + n_eff[b]) / (2.0 * n_eff[a] * n_eff[b]))**2
        for a, b in pairs
    ])
    return beta1_c, beta2_cc


def prior_mean_lambda1_sq(n_eff, alpha1, beta1):
    """Prior mean of lambda1_sq per group: (alpha1/beta1) * n_eff**2."""
    n_eff = np.asarray(n_eff, dtype=float)
    return (alpha1 / beta1) * n_eff**2


def prior_mean_lambda2_sq(n_eff, alpha2, beta2):
    """Prior mean of lambda2_sq per canonical group pair:
    (alpha2/beta2) * (2 n_a n_b / (n_a + n_b))**2."""
    n_eff = np.asarray(n_eff, dtype=float)
    pairs = group_pairs(n_eff.size)
    hm = np.array([2.0 * n_eff[a] * n_eff[b] / (n_eff[a] + n_eff[b])
                   for a, b in pairs])
    return (alpha2 / beta2) * hm**2


def prior_mean_curves(n, deltas, hyper):
    """Prior means of the shrinkage weights on a grid of delta values.

    Returns a dict with keys 'delta' (grid), 'within' (len(grid) x C)
    and 'cross' (len(grid) x C*(C-1)/2), suitable for plotting how the
    sample-size correction fades as delta approaches 1.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size == 0:
        raise ParameterError("delta grid must be nonempty")
    hyper = hyper.resolved(n)
    within = []
    cross = []
    for d in deltas:
        ne = effective_sample_sizes(n, d)
        within.append(prior_mean_lambda1_sq(ne, hyper.alpha1, hyper.beta1))
        cross.append(prior_mean_lambda2_sq(ne, hyper.alpha2, hyper.beta2))
    return {
        "delta": deltas,
        "within": np.array(within),
        "cross": np.array(cross),
        "group_pairs": group_pairs(len(n)),
    }
