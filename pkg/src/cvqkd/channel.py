"""Gaussian-modulated coherent states through a pure-loss channel, mixed
with a local oscillator on a balanced beam splitter and counted by two
photon-number-resolving detectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistributionError, DomainError
from .quantum import log_poisson


@dataclass(frozen=True)
class ProtocolParams:
    """Experiment configuration.

    Attributes:
        sigma2: modulation variance per quadrature (photon-number scale).
        beta: local-oscillator amplitude, real and non-negative.
        phi: local-oscillator phase in radians.
        eta: overall channel transmissivity, detector efficiency included.
    """

    sigma2: float = 2.0
    beta: float = 2.0
    phi: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.sigma2 >= 0:
            raise DomainError(f"sigma2 must be non-negative, got {self.sigma2}")
        if not self.beta >= 0:
            raise DomainError(f"beta must be non-negative, got {self.beta}")
        if not math.isfinite(self.phi):
            raise DomainError(f"phi must be finite, got {self.phi}")


@dataclass(frozen=True)
class PhotocountMeans:
    """Poisson means at the two detectors (scalars or matching arrays)."""

    mu1: float | np.ndarray
    mu2: float | np.ndarray


def gaussian_modulation_pdf(z, sigma2: float):
    """Density of N(0, sigma2) at ``z``."""
    if not sigma2 > 0:
        raise DegenerateDistributionError(
            f"modulation variance must be positive, got {sigma2}")
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z / sigma2) / math.sqrt(2.0 * math.pi * sigma2)
    return float(out) if out.ndim == 0 else out


def bs_output_amplitudes(alpha: complex, beta: float, phi: float) -> tuple[complex, complex]:
    """Coherent amplitudes leaving a balanced beam splitter fed by ``|alpha>``
    and the local oscillator ``|beta e^{i phi}>``."""
    lo = beta * complex(math.cos(phi), math.sin(phi))
    s = math.sqrt(0.5)
    return (alpha + lo) * s, (lo - alpha) * s


def photocount_means(x, y, params: ProtocolParams) -> PhotocountMeans:
    """Mean photocounts for Alice's symbol ``(x, y)``; vectorized over x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta, beta = params.eta, params.beta
    common = 0.5 * (eta * (x * x + y * y) + beta * beta)
    cross = math.sqrt(eta) * beta * (x * math.cos(params.phi) + y * math.sin(params.phi))
    # both means are squared moduli; clip round-off below zero
    mu1 = np.maximum(common + cross, 0.0)
    mu2 = np.maximum(common - cross, 0.0)
    if mu1.ndim == 0:
        return PhotocountMeans(float(mu1), float(mu2))
    return PhotocountMeans(mu1, mu2)


def joint_density(x: float, y: float, n: int, m: int, params: ProtocolParams) -> float:
    """Joint density of Alice's ``(x, y)`` and Bob's counts ``(n, m)``."""
    if n < 0 or m < 0:
        raise DomainError(f"counts must be non-negative, got ({n}, {m})")
    means = photocount_means(x, y, params)
    pdf = gaussian_modulation_pdf(x, params.sigma2) * gaussian_modulation_pdf(y, params.sigma2)
    return float(pdf * np.exp(log_poisson(n, means.mu1) + log_poisson(m, means.mu2)))


def eve_tap_amplitude(x, y, eta: float):
    """Amplitude ``sqrt(1 - eta) (x + iy)`` diverted to Eve by the lossy channel."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    out = math.sqrt(1.0 - eta) * (np.asarray(x) + 1j * np.asarray(y))
    return complex(out) if out.ndim == 0 else out
