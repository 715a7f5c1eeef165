"""Structured simulation truths and Gaussian data generation.

Four related precision matrices over p variables (p >= 5, default 20):

* The base matrix has unit diagonal, 0.5 on the first off-diagonal and
  0.4 on the second.
* The second matrix zeroes 5 randomly chosen nonzero entries of the
  base and turns 5 null entries into values drawn uniformly from
  [-0.6, -0.4] union [0.4, 0.6].
* The third removes 10 edges shared by the first two and adds 10 new
  edges present in neither, drawn the same way.
* The fourth removes 5 of the edges common to all first three and adds
  5 edges present in none of them.

Each matrix keeps 37 edges when p = 20, and the pairwise shared-edge
counts are fixed by the construction: 32, 22, 17, 27, 22, 32 over the
canonical pair order.

The derived matrices (second through fourth) are made positive definite
by dividing each off-diagonal entry by a multiple of the sum of the
absolute off-diagonal values in its row and averaging with the
transpose; the base matrix is already positive definite and is left
untouched.  Repairs are verified and the caller retries with a fresh
perturbation draw on failure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .model import PanDataset, group_pairs, variable_pairs

__all__ = ["SimTruth", "build_theta1", "perturb_chain",
           "make_positive_definite", "simulate_truths", "generate_dataset"]

#: Divisor multiple for the positive-definite repair.  1.0 reproduces
#: the benchmark operating point (verified against the reported
#: frequentist baselines); 1.5 guarantees strict diagonal dominance and
#: is available for callers that want the conservative variant.
DEFAULT_REPAIR_SLACK = 1.0


@dataclass
class SimTruth:
    """The four true precision matrices with their edge bookkeeping."""

    thetas: list                     # 4 (p, p) arrays, positive definite
    adjacency: np.ndarray            # (4, E) bool over canonical pairs
    shared_edge_proportions: np.ndarray  # per canonical group pair

    @property
    def p(self):
        return self.thetas[0].shape[0]


def build_theta1(p=20):
    """Banded base precision matrix: unit diagonal, 0.5 and 0.4 bands."""
    if p < 3:
        raise ParameterError("need p >= 3 for the banded base matrix")
    T = np.eye(p)
    idx = np.arange(p - 1)
    T[idx, idx + 1] = T[idx + 1, idx] = 0.5
    idx = np.arange(p - 2)
    T[idx, idx + 2] = T[idx + 2, idx] = 0.4
    return T


def _edge_set(T):
    iu = variable_pairs(T.shape[0])
    nz = np.abs(T[iu]) > 0
    return {(int(a), int(b)) for a, b in zip(iu[0][nz], iu[1][nz])}


def _draw_magnitudes(rng, k):
    """k values uniform over [-0.6, -0.4] union [0.4, 0.6]."""
    g = rng.generator
    mag = g.uniform(0.4, 0.6, k)
    sign = np.where(g.random(k) < 0.5, -1.0, 1.0)
    return mag * sign


def _choose(rng, items, k):
    items = sorted(items)
    if len(items) < k:
        raise ParameterError(
            f"cannot choose {k} positions from {len(items)} candidates")
    picked = rng.generator.choice(len(items), size=k, replace=False)
    return [items[i] for i in picked]


def perturb_chain(rng, theta1, changes=(5, 10, 5)):
    """Derive the second, third and fourth truth from the base matrix.

    ``changes`` gives the number of edges swapped at each step: the
    second matrix flips changes[0] edges of the base, the third removes
    changes[1] edges shared by the first two and adds as many fresh
    ones, the fourth does the same with changes[2] over the three-way
    common edges.  Returns the matrices before positive-definite
    repair; edge bookkeeping is recomputable from the zero patterns.
    """
    p = theta1.shape[0]
    k2, k3, k4 = changes
    all_pairs = set(zip(*(a.tolist() for a in variable_pairs(p))))
    e1 = _edge_set(theta1)

    t2 = theta1.copy()
    for (i, j) in _choose(rng, e1, k2):
        t2[i, j] = t2[j, i] = 0.0
    added = _choose(rng, all_pairs - e1, k2)
    for (i, j), val in zip(added, _draw_magnitudes(rng, k2)):
        t2[i, j] = t2[j, i] = val
    e2 = _edge_set(t2)

    t3 = t2.copy()
    for (i, j) in _choose(rng, e1 & e2, k3):
        t3[i, j] = t3[j, i] = 0.0
    added = _choose(rng, all_pairs - (e1 | e2), k3)
    for (i, j), val in zip(added, _draw_magnitudes(rng, k3)):
        t3[i, j] = t3[j, i] = val
    e3 = _edge_set(t3)

    t4 = t3.copy()
    for (i, j) in _choose(rng, e1 & e2 & e3, k4):
        t4[i, j] = t4[j, i] = 0.0
    added = _choose(rng, all_pairs - (e1 | e2 | e3), k4)
    for (i, j), val in zip(added, _draw_magnitudes(rng, k4)):
        t4[i, j] = t4[j, i] = val
    return t2, t3, t4


def make_positive_definite(theta, slack=DEFAULT_REPAIR_SLACK):
    """Rescale off-diagonal rows and symmetrize; verify the result.

    Each off-diagonal entry is divided by ``slack`` times the sum of
    absolute off-diagonal values in its row (rows with no off-diagonal
    mass are left alone), then the matrix is averaged with its
    transpose.  The zero pattern and the diagonal are preserved.
    Raises NumericalError if the result is not positive definite.
    """
    M = np.array(theta, dtype=float)
    p = M.shape[0]
    if M.shape != (p, p):
        raise ParameterError("input must be square")
    row_mass = np.abs(M).sum(axis=1) - np.abs(np.diag(M))
    divisor = np.where(row_mass > 0, slack * row_mass, 1.0)
    off = ~np.eye(p, dtype=bool)
    M[off] = (M / divisor[:, None])[off]
    M = (M + M.T) / 2.0
    smallest = np.linalg.eigvalsh(M)[0]
    if smallest <= 0:
        raise NumericalError(
            f"repair failed: smallest eigenvalue {smallest:.3e} <= 0")
    return M


def simulate_truths(rng, p=20, changes=(5, 10, 5),
                    repair_slack=DEFAULT_REPAIR_SLACK, max_attempts=100):
    """Build the four truths, repairing the derived ones until all are
    positive definite (fresh perturbation draws on failure)."""
    t1 = build_theta1(p)
    if np.linalg.eigvalsh(t1)[0] <= 0:
        raise NumericalError("base matrix is not positive definite")
    for _ in range(max_attempts):
        raw = perturb_chain(rng, t1, changes)
        try:
            repaired = [make_positive_definite(t, repair_slack) for t in raw]
        except NumericalError:
            continue
        thetas = [t1] + repaired
        iu = variable_pairs(p)
        adjacency = np.array([np.abs(t[iu]) > 0 for t in thetas])
        n_edges = adjacency.sum(axis=1)
        shared = np.array([
            (adjacency[a] & adjacency[b]).sum() / max(n_edges[a], n_edges[b])
            for a, b in group_pairs(4)])
        return SimTruth(thetas=thetas, adjacency=adjacency,
                        shared_edge_proportions=shared)
    raise NumericalError(
        f"no positive definite perturbation found in {max_attempts} attempts")


def generate_dataset(rng, truths, n=(20, 40, 60, 80), labels=None):
    """Sample n_c mean-zero Gaussian rows per group from each truth."""
    thetas = truths.thetas if isinstance(truths, SimTruth) else list(truths)
    if len(n) != len(thetas):
        raise ParameterError(
            f"got {len(n)} sample sizes for {len(thetas)} truths")
    if labels is None:
        labels = [f"C{k + 1}" for k in range(len(thetas))]
    groups = []
    for label, T, n_c in zip(labels, thetas, n):
        L = np.linalg.cholesky(T)
        z = rng.generator.standard_normal((int(n_c), T.shape[0]))
        # x = inv(L') z has covariance inv(L L') = inv(T)
        X = np.linalg.solve(L.T, z.T).T
        groups.append((label, X))
    p = thetas[0].shape[0]
    names = [f"v{j}" for j in range(p)]
    return PanDataset(groups, variable_names=names, standardize=False)
