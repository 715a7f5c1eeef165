"""Seeded random variate generators used by the Gibbs sampler.

Streams are splittable: ``RngHandle(seed).derive(i, j, ...)`` builds a
child stream keyed by the integer path, so replicates and chains get
independent, reproducible streams from one master seed without any
shared state.

Algorithms are fixed so that traces are reproducible given the seed:

* gamma: Marsaglia-Tsang squeeze for shape >= 1, with the standard
  U**(1/shape) boost for shape < 1;
* inverse-Gaussian: Michael-Schucany-Haas transform-with-roots, written
  in a cancellation-free form;
* multivariate normal from a precision matrix: Cholesky factorization
  and a back-solve, never forming the inverse.
"""

import numpy as np
from scipy.linalg import get_lapack_funcs

from .errors import NumericalError, ParameterError

__all__ = [
    "RngHandle",
    "sample_gamma",
    "sample_inverse_gaussian",
    "sample_mvn_from_precision",
    "sample_mvn_canonical",
]

_potrf, _potrs, _trtrs = get_lapack_funcs(
    ("potrf", "potrs", "trtrs"), (np.empty((2, 2), dtype=float),))


class RngHandle:
    """A seeded random stream with splittable children.

    Two handles built from the same seed and derivation path produce
    bit-identical variate sequences.  ``derive`` never consumes state
    from the parent, so children can be created from any thread.
    """

    def __init__(self, seed, _path=()):
        if int(seed) < 0:
            raise ParameterError("seed must be a nonnegative integer")
        self.seed = int(seed)
        self.path = tuple(int(k) for k in _path)
        self.generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.path)))

    def derive(self, *indices):
        """Child handle keyed by (seed, path + indices); independent stream."""
        return RngHandle(self.seed, self.path + tuple(indices))

    def __repr__(self):
        return f"RngHandle(seed={self.seed}, path={self.path})"


def _gen(rng):
    return rng.generator if isinstance(rng, RngHandle) else rng


def sample_gamma(rng, shape, rate, size=None):
    """Draw from Gamma(shape, rate); mean shape/rate.

    Marsaglia-Tsang for shape >= 1.  For shape < 1 a draw with shape+1
    is scaled by U**(1/shape).
    """
    if not (np.isfinite(shape) and shape > 0) or not (np.isfinite(rate) and rate > 0):
        raise ParameterError(f"gamma parameters must be positive, got "
                             f"shape={shape}, rate={rate}")
    g = _gen(rng)
    if shape < 1.0:
        base = _std_gamma(g, shape + 1.0, size)
        u = g.random(size) if size is not None else g.random()
        return base * u ** (1.0 / shape) / rate
    return _std_gamma(g, shape, size) / rate


def _std_gamma(g, shape, size):
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    if size is None:
        while True:
            x = g.standard_normal()
            t = 1.0 + c * x
            if t <= 0.0:
                continue
            v = t * t * t
            u = g.random()
            if u < 1.0 - 0.0331 * x**4:
                return d * v
            if np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(v)):
                return d * v
    out = np.empty(size, dtype=float)
    pending = np.ones(size, dtype=bool).reshape(-1)
    flat = out.reshape(-1)
    while pending.any():
        k = int(pending.sum())
        x = g.standard_normal(k)
        t = 1.0 + c * x
        v = t * t * t
        u = g.random(k)
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = (t > 0) & ((u < 1.0 - 0.0331 * x**4)
                            | (np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(v))))
        idx = np.flatnonzero(pending)[ok]
        flat[idx] = d * v[ok]
        pending[idx] = False
    return out


def sample_inverse_gaussian(rng, mean, shape, size=None):
    """Draw from Inverse-Gaussian(mean mu, shape lam); E = mu, Var = mu**3/lam.

    Accepts scalars or broadcastable arrays for mean/shape.
    """
    mu = np.asarray(mean, dtype=float)
    lam = np.asarray(shape, dtype=float)
    if np.any(mu <= 0) or np.any(lam <= 0) or not (np.all(np.isfinite(mu))
                                                   and np.all(np.isfinite(lam))):
        raise ParameterError("inverse-Gaussian parameters must be positive")
    g = _gen(rng)
    out_shape = np.broadcast_shapes(mu.shape, lam.shape) if size is None else size
    y = g.standard_normal(out_shape) ** 2
    w = mu * y
    s = np.sqrt(w * (w + 4.0 * lam))
    # root x1 = mu*(1 + (w - sqrt(w*(w+4 lam)))/(2 lam)) rewritten without
    # the subtraction of nearly equal terms
    denom = (w + s) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        x1 = np.where(w > 0.0, 4.0 * lam * mu * w / np.where(denom > 0, denom, 1.0), mu)
    u = g.random(out_shape)
    accept_first = u <= mu / (mu + x1)
    with np.errstate(divide="ignore"):
        other = np.where(x1 > 0, mu * mu / np.where(x1 > 0, x1, 1.0), mu)
    draw = np.where(accept_first, x1, other)
    if np.ndim(draw) == 0 and size is None and np.ndim(mean) == 0:
        return float(draw)
    return draw


def sample_mvn_from_precision(rng, mean, precision):
    """Draw from N(mean, inverse(precision)) via a Cholesky back-solve."""
    mean = np.asarray(mean, dtype=float)
    precision = np.asarray(precision, dtype=float)
    k = mean.size
    if precision.shape != (k, k):
        raise ParameterError(f"precision must be {k}x{k}, got {precision.shape}")
    chol, info = _potrf(precision, lower=1, clean=0, overwrite_a=0)
    if info != 0:
        raise NumericalError(
            f"precision matrix is not positive definite "
            f"(leading minor {info})", minor=int(info))
    z = _gen(rng).standard_normal(k)
    w, _ = _trtrs(chol, z, lower=1, trans=1)
    return mean + w


def sample_mvn_canonical(rng, b, precision, z=None):
    """Draw from N(inverse(precision) @ b, inverse(precision)).

    One factorization serves both the mean solve and the noise solve,
    which is what the precision-matrix column updates need.
    """
    b = np.asarray(b, dtype=float)
    precision = np.asarray(precision, dtype=float)
    chol, info = _potrf(precision, lower=1, clean=0, overwrite_a=0)
    if info != 0:
        raise NumericalError(
            f"precision matrix is not positive definite "
            f"(leading minor {info})", minor=int(info))
    mu, _ = _potrs(chol, b, lower=1)
    if z is None:
        z = _gen(rng).standard_normal(b.size)
    w, _ = _trtrs(chol, z, lower=1, trans=1)
    return mu + w
