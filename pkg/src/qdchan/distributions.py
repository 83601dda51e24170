"""Seedable random streams and the five variate families driving the model.

Every stochastic quantity in the generator is drawn from an `RngStream`,
identified by a 64-bit seed plus a derivation path of integers (for example
``(rx_index, cluster, family, side, stage)``). Streams with the same
(seed, path) replay the same sequence; distinct paths are statistically
independent, so adding components to one cluster never perturbs another.
"""

from ._backend import pykernels as _core
from .errors import ParameterError

__all__ = [
    "RngStream",
    "sample_normal",
    "sample_rician",
    "sample_laplacian",
    "sample_exponential",
    "sample_uniform",
]


class RngStream:
    """A counter-based random stream addressed by (seed, path).

    Immutable except for the draw counter; confine one stream to one thread.
    Derive independent sub-streams with :meth:`child`.
    """

    __slots__ = ("seed", "path", "_key", "_ctr")

    def __init__(self, seed, path=()):
        self.seed = int(seed)
        self.path = tuple(int(w) for w in path)
        self._key = _core.derive_key(self.seed, self.path)
        self._ctr = 0

    @property
    def key(self):
        """Derived 64-bit stream key (stable for a given seed and path)."""
        return self._key

    @property
    def counter(self):
        return self._ctr

    def child(self, *words):
        """New independent stream with `words` appended to the path."""
        return RngStream(self.seed, self.path + words)

    def next_u64(self):
        x = _core.stream_u64(self._key, self._ctr)
        self._ctr += 1
        return x

    def uniform(self, a, b):
        return sample_uniform(self, a, b)

    def normal(self, mu, sigma):
        return sample_normal(self, mu, sigma)

    def rician(self, s, sigma):
        return sample_rician(self, s, sigma)

    def laplacian(self, mu, variance):
        return sample_laplacian(self, mu, variance)

    def exponential(self, lam):
        return sample_exponential(self, lam)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path}, counter={self._ctr})"


def sample_normal(rng, mu, sigma):
    """Normal variate with mean `mu` and standard deviation `sigma` >= 0."""
    if sigma < 0.0:
        raise ParameterError(f"normal: sigma must be >= 0, got {sigma}")
    v, rng._ctr = _core.normal(rng._key, rng._ctr, mu, sigma)
    return v


def sample_rician(rng, s, sigma):
    """Rician variate sqrt(Y^2 + Z^2), Y~N(s, sigma^2), Z~N(0, sigma^2).

    With sigma == 0 the draw degenerates to `s` exactly.
    """
    if s < 0.0:
        raise ParameterError(f"rician: s must be >= 0, got {s}")
    if sigma < 0.0:
        raise ParameterError(f"rician: sigma must be >= 0, got {sigma}")
    v, rng._ctr = _core.rician(rng._key, rng._ctr, s, sigma)
    return v


def sample_laplacian(rng, mu, variance):
    """Laplace variate with mean `mu` and variance `variance` >= 0."""
    if variance < 0.0:
        raise ParameterError(f"laplacian: variance must be >= 0, got {variance}")
    v, rng._ctr = _core.laplacian(rng._key, rng._ctr, mu, variance)
    return v


def sample_exponential(rng, lam):
    """Exponential variate with mean 1/lam; lam must be > 0."""
    if lam <= 0.0:
        raise ParameterError(f"exponential: lambda must be > 0, got {lam}")
    v, rng._ctr = _core.exponential(rng._key, rng._ctr, lam)
    return v


def sample_uniform(rng, a, b):
    """Uniform variate in [a, b]; requires a <= b."""
    if a > b:
        raise ParameterError(f"uniform: need a <= b, got a={a}, b={b}")
    v, rng._ctr = _core.uniform(rng._key, rng._ctr, a, b)
    return v
