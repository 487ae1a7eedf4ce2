"""Sampling oracles, independent of the quadrature machinery.

Random streams are counter-based (Philox keyed by ``(seed, batch)``) so a
batch produces the same draws whichever worker runs it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ProtocolParams, photocount_means
from .errors import DegenerateDistributionError, DomainError, SupportExplosionError
from .quantum import (
    FockDensityMatrix,
    accumulate_coherent_mixture,
    fock_entropy,
    poisson_entropy,
)

MAX_HISTOGRAM_CELLS = 1_000_000
_CODE_BASE = 1 << 24


@dataclass(frozen=True)
class SampleRound:
    x: float
    y: float
    n: int
    m: int


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    num_samples: int
    seed: int

    def __post_init__(self):
        if self.stderr < 0:
            raise DomainError("standard error must be non-negative")
        if self.num_samples < 1000:
            raise DomainError("an estimate needs at least 1000 samples")

    def contains(self, value: float, k: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.value - value) <= max(k * self.stderr, floor)


def stream(seed: int, batch: int = 0) -> np.random.Generator:
    """Random generator for batch ``batch`` of run ``seed``."""
    if seed < 0 or batch < 0:
        raise DomainError("seed and batch index must be non-negative")
    return np.random.Generator(np.random.Philox(key=np.array([seed, batch], dtype=np.uint64)))


def sample_rounds(params: ProtocolParams, size: int, rng: np.random.Generator):
    """Draw ``size`` protocol rounds; returns arrays ``(x, y, n, m)``."""
    if not params.sigma2 > 0:
        raise DegenerateDistributionError("sampling needs sigma2 > 0")
    sd = math.sqrt(params.sigma2)
    x = rng.normal(0.0, sd, size)
    y = rng.normal(0.0, sd, size)
    means = photocount_means(x, y, params)
    n = rng.poisson(means.mu1)
    m = rng.poisson(means.mu2)
    return x, y, n, m


def sample_round(params: ProtocolParams, rng: np.random.Generator) -> SampleRound:
    x, y, n, m = sample_rounds(params, 1, rng)
    return SampleRound(float(x[0]), float(y[0]), int(n[0]), int(m[0]))


def _histogram(n: np.ndarray, m: np.ndarray):
    codes, counts = np.unique(n.astype(np.int64) * _CODE_BASE + m, return_counts=True)
    if codes.size > MAX_HISTOGRAM_CELLS:
        raise SupportExplosionError(f"{codes.size} distinct count pairs")
    return codes, counts


def miller_madow_entropy(counts: np.ndarray) -> float:
    """Plug-in entropy (nats) plus the ``(K - 1) / 2N`` bias correction."""
    counts = counts[counts > 0]
    total = counts.sum()
    p = counts / total
    return float(-np.sum(p * np.log(p)) + (counts.size - 1) / (2.0 * total))


def _batch_sizes(num_samples: int, batches: int) -> list[int]:
    base, extra = divmod(num_samples, batches)
    return [base + (b < extra) for b in range(batches)]


def mc_mutual_info(params: ProtocolParams, num_samples: int = 1_000_000, seed: int = 0,
                   batches: int = 16, chunk: int = 1_000_000) -> McEstimate:
    """Monte Carlo estimate of ``I(X; L)`` in bits.

    ``H(L)`` comes from the pooled count histogram (Miller-Madow corrected);
    ``H(L|X)`` averages the exact Poisson entropies of each sampled symbol.
    The standard error is from the spread of per-batch estimates.
    """
    if num_samples < 10_000:
        raise DomainError("mc_mutual_info needs at least 10^4 samples")
    per_batch = []
    pooled_codes, pooled_counts = [], []
    cond_total = 0.0
    for b, size in enumerate(_batch_sizes(num_samples, batches)):
        rng = stream(seed, b)
        cond = 0.0
        codes_b, counts_b = [], []
        for start in range(0, size, chunk):
            x, y, n, m = sample_rounds(params, min(chunk, size - start), rng)
            means = photocount_means(x, y, params)
            cond += float(np.sum(poisson_entropy(means.mu1, math.e))
                          + np.sum(poisson_entropy(means.mu2, math.e)))
            c, k = _histogram(n, m)
            codes_b.append(c)
            counts_b.append(k)
        codes, inverse = np.unique(np.concatenate(codes_b), return_inverse=True)
        counts = np.bincount(inverse, weights=np.concatenate(counts_b)).astype(np.int64)
        per_batch.append(miller_madow_entropy(counts) - cond / size)
        pooled_codes.append(codes)
        pooled_counts.append(counts)
        cond_total += cond
    codes, inverse = np.unique(np.concatenate(pooled_codes), return_inverse=True)
    if codes.size > MAX_HISTOGRAM_CELLS:
        raise SupportExplosionError(f"{codes.size} distinct count pairs")
    counts = np.bincount(inverse, weights=np.concatenate(pooled_counts)).astype(np.int64)
    value = miller_madow_entropy(counts) - cond_total / num_samples
    stderr = float(np.std(per_batch, ddof=1) / math.sqrt(batches))
    return McEstimate(value / math.log(2), stderr / math.log(2), num_samples, seed)


# --------------------------------------------------------------------------
# Coherent-state ensembles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoherentEnsemble:
    """Mixture of ``|scale (x + iy)>`` with ``x ~ N(mean_x, var_x)`` and
    ``y ~ N(mean_y, var_y)``, optionally reweighted by ``exp(log_likelihood(x, y))``.

    A zero variance pins that quadrature to its mean.
    """

    var_x: float
    var_y: float
    mean_x: float = 0.0
    mean_y: float = 0.0
    scale: float = 1.0
    log_likelihood: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    @classmethod
    def eve_unconditional(cls, params: ProtocolParams) -> CoherentEnsemble:
        return cls(params.sigma2, params.sigma2, scale=math.sqrt(1.0 - params.eta))

    @classmethod
    def eve_given_x(cls, params: ProtocolParams, x: float) -> CoherentEnsemble:
        return cls(0.0, params.sigma2, mean_x=x, scale=math.sqrt(1.0 - params.eta))

    @classmethod
    def eve_given_homodyne(cls, params: ProtocolParams, x_b: float) -> CoherentEnsemble:
        """Prior over Alice's symbol reweighted by the likelihood of Bob's
        homodyne outcome ``x_b ~ N(sqrt(eta) x, 1/4)``."""
        root = math.sqrt(params.eta)

        def loglik(x, y):
            return -2.0 * (x_b - root * x) ** 2

        return cls(params.sigma2, params.sigma2, scale=math.sqrt(1.0 - params.eta),
                   log_likelihood=loglik)

    def _weights(self, x, y, base):
        if self.log_likelihood is None:
            return base
        logw = np.log(base) + self.log_likelihood(x, y)
        return np.exp(logw - logw.max())

    def sample(self, size: int, rng: np.random.Generator):
        x = self.mean_x + math.sqrt(self.var_x) * rng.standard_normal(size)
        y = self.mean_y + math.sqrt(self.var_y) * rng.standard_normal(size)
        return self.scale * (x + 1j * y), self._weights(x, y, np.ones(size))

    def quadrature(self, order: int):
        """Gauss-Hermite nodes and weights over the ensemble."""
        def rule(mean, var):
            if var == 0:
                return np.array([mean]), np.array([1.0])
            t, w = np.polynomial.hermite_e.hermegauss(order)
            return mean + math.sqrt(var) * t, w / w.sum()

        xs, wx = rule(self.mean_x, self.var_x)
        ys, wy = rule(self.mean_y, self.var_y)
        x, y = (a.ravel() for a in np.meshgrid(xs, ys, indexing="ij"))
        return self.scale * (x + 1j * y), self._weights(x, y, np.outer(wx, wy).ravel())


def _mixture_entropy(alphas, weights, cutoff: int, chunk: int = 20_000) -> float:
    rho = FockDensityMatrix.zeros(cutoff)
    for start in range(0, alphas.size, chunk):
        rho = accumulate_coherent_mixture(rho, alphas[start:start + chunk], weights[start:start + chunk])
    rho = FockDensityMatrix(rho.matrix / weights.sum(), rho.trunc_budget)
    return fock_entropy(rho.normalized())


def mc_fock_entropy_check(ensemble: CoherentEnsemble, num_components: int, cutoff: int,
                          seed: int = 0) -> float:
    """Entropy (bits) of ``num_components`` sampled coherent projectors."""
    alphas, weights = ensemble.sample(num_components, stream(seed))
    return _mixture_entropy(alphas, weights, cutoff)


def quadrature_fock_entropy(ensemble: CoherentEnsemble, order: int, cutoff: int) -> float:
    """Entropy (bits) of the ensemble integrated by Gauss-Hermite quadrature."""
    alphas, weights = ensemble.quadrature(order)
    return _mixture_entropy(alphas, weights, cutoff)
