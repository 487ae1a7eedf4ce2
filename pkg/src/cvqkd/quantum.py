"""Single-mode state numerics: Poisson statistics, coherent-state Fock
amplitudes, truncated density matrices and von Neumann entropies.

Quadrature convention: ``GaussianStateCM`` uses normalized quadratures with
vacuum variance 1, so a coherent state ``|x + iy>`` has mean ``(2x, 2y)`` and
identity covariance. All entropies are in bits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .errors import (
    DomainError,
    InvariantViolation,
    TruncationSaturationWarning,
    UnphysicalStateError,
)

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
EIG_CLAMP = 1e-14

_LOG_FACTORIAL = np.zeros(1)


def log_factorial(n):
    """``log(n!)`` from a cached cumulative table (integer ``n`` only)."""
    global _LOG_FACTORIAL
    n = np.asarray(n)
    top = int(n.max()) if n.size else 0
    if top >= _LOG_FACTORIAL.size:
        size = max(top + 1, 2 * _LOG_FACTORIAL.size)
        _LOG_FACTORIAL = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, size)))))
    return _LOG_FACTORIAL[n]


# --------------------------------------------------------------------------
# Poisson statistics
# --------------------------------------------------------------------------

def log_poisson(n, mu):
    """Elementwise ``log P(n; mu)``, broadcasting ``n`` against ``mu``.

    ``mu == 0`` gives ``0`` at ``n == 0`` and ``-inf`` elsewhere.
    """
    n = np.asarray(n)
    mu = np.asarray(mu, dtype=float)
    pos = mu > 0
    safe = np.where(pos, mu, 1.0)
    out = n * np.log(safe) - safe - log_factorial(n)
    return np.where(pos, out, np.where(n == 0, 0.0, -np.inf))


def poisson_pmf(n: int, mu: float) -> float:
    """Poisson probability ``exp(-mu) mu**n / n!`` evaluated in log space."""
    if n < 0 or int(n) != n:
        raise DomainError(f"photon count must be a non-negative integer, got {n}")
    if not mu >= 0:
        raise DomainError(f"Poisson mean must be non-negative, got {mu}")
    return float(np.exp(log_poisson(int(n), mu)))


def poisson_entropy(mu, base: float = 2.0):
    """Shannon entropy of Poisson(mu), by direct summation over a window
    of +-(10 sqrt(mu) + 25) counts around the mode. Vectorized over ``mu``."""
    mu = np.asarray(mu, dtype=float)
    flat = mu.ravel()
    out = np.empty_like(flat)
    # sorted chunks keep the window width close to what each chunk needs
    order = np.argsort(flat, kind="stable")
    for start in range(0, flat.size, 4096):
        idx = order[start:start + 4096]
        m = flat[idx]
        width = 2 * int(math.ceil(10.0 * math.sqrt(m[-1]) + 25)) + 1
        lo = np.maximum(np.floor(m).astype(np.int64) - width // 2, 0)
        n = lo[:, None] + np.arange(width)[None, :]
        lp = log_poisson(n, m[:, None])
        p = np.exp(lp)
        out[idx] = -np.sum(p * np.where(p > 0, lp, 0.0), axis=1)
    return (out / math.log(base)).reshape(mu.shape)


# --------------------------------------------------------------------------
# Truncation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationPolicy:
    """How far to extend a photon-number basis or count support."""

    tail_mass: float = 1e-10
    max_cutoff: int = 256
    safety_factor: float = 1.2

    def __post_init__(self):
        if not 0 < self.tail_mass < 1:
            raise DomainError(f"tail_mass must lie in (0, 1), got {self.tail_mass}")
        if self.max_cutoff < 8:
            raise DomainError(f"max_cutoff must be at least 8, got {self.max_cutoff}")
        if self.safety_factor < 1:
            raise DomainError(f"safety_factor must be >= 1, got {self.safety_factor}")


def cutoff_from_survival(survival: Callable[[np.ndarray], np.ndarray],
                         policy: TruncationPolicy, tail_mass: float | None = None) -> int:
    """Basis size from a survival function ``n -> P(N > n)``.

    Finds the smallest ``n`` with ``P(N > n) < tail_mass``, scales the
    dimension ``n + 1`` by the safety factor and clamps to ``[8, max_cutoff]``.
    Warns with ``TruncationSaturationWarning`` when the cap is reached.
    """
    tail = policy.tail_mass if tail_mass is None else tail_mass
    ns = np.arange(policy.max_cutoff)
    below = np.nonzero(np.asarray(survival(ns)) < tail)[0]
    if below.size == 0:
        warnings.warn(
            f"truncation saturated at max_cutoff={policy.max_cutoff}; "
            f"tail mass {tail:g} not reached",
            TruncationSaturationWarning,
            stacklevel=3,
        )
        return policy.max_cutoff
    dim = math.ceil(policy.safety_factor * (int(below[0]) + 1) - 1e-9)
    if dim > policy.max_cutoff:
        warnings.warn(
            f"truncation saturated at max_cutoff={policy.max_cutoff} "
            f"(requested {dim})",
            TruncationSaturationWarning,
            stacklevel=3,
        )
        return policy.max_cutoff
    return max(8, dim)


def choose_cutoff(mu_max: float, policy: TruncationPolicy = TruncationPolicy()) -> int:
    """Basis size capturing Poisson(mu_max) up to the policy tail mass."""
    if not mu_max >= 0:
        raise DomainError(f"mu_max must be non-negative, got {mu_max}")
    return cutoff_from_survival(lambda n: stats.poisson.sf(n, mu_max), policy)


def thermal_cutoff(nbar: float, policy: TruncationPolicy = TruncationPolicy()) -> int:
    """Basis size for a thermal state, whose survival is (nbar/(nbar+1))**(n+1)."""
    if not nbar >= 0:
        raise DomainError(f"mean photon number must be non-negative, got {nbar}")
    ratio = nbar / (nbar + 1.0)
    return cutoff_from_survival(lambda n: ratio ** (n + 1.0), policy)


# --------------------------------------------------------------------------
# Fock-basis states
# --------------------------------------------------------------------------

def coherent_log_amplitudes(alphas, cutoff: int):
    """Log-modulus and phase of ``<n|alpha>`` for ``n < cutoff``.

    Returns two arrays of shape ``(cutoff,) + alphas.shape``.
    """
    if cutoff < 1:
        raise DomainError(f"cutoff must be >= 1, got {cutoff}")
    alphas = np.asarray(alphas, dtype=complex)
    n = np.arange(cutoff).reshape((cutoff,) + (1,) * alphas.ndim)
    r = np.abs(alphas)
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r)
        logmag = n * np.where(r > 0, logr, -np.inf) - 0.5 * log_factorial(n) - 0.5 * r**2
    logmag = np.where(n == 0, -0.5 * r**2, logmag)
    phase = n * np.angle(alphas)
    return logmag, phase


def coherent_fock_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Coefficients ``exp(-|alpha|^2/2) alpha^n / sqrt(n!)``, ``n < cutoff``."""
    logmag, phase = coherent_log_amplitudes(alpha, cutoff)
    return np.exp(logmag) * np.exp(1j * phase)


@dataclass
class FockDensityMatrix:
    """Density matrix in the truncated number basis ``{|0>, ..., |cutoff-1>}``.

    ``trunc_budget`` is the trace deficit tolerated from truncation and
    ``discarded`` records the mass removed by an explicit renormalization.
    """

    matrix: np.ndarray
    trunc_budget: float = 1e-10
    discarded: float = 0.0

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def zeros(cls, cutoff: int, trunc_budget: float = 1e-10) -> FockDensityMatrix:
        if cutoff < 1:
            raise DomainError(f"cutoff must be >= 1, got {cutoff}")
        return cls(np.zeros((cutoff, cutoff), dtype=complex), trunc_budget)

    @classmethod
    def vacuum(cls, cutoff: int) -> FockDensityMatrix:
        rho = cls.zeros(cutoff)
        rho.matrix[0, 0] = 1.0
        return rho

    @classmethod
    def thermal(cls, nbar: float, cutoff: int) -> FockDensityMatrix:
        """Thermal state; the basis tail beyond ``cutoff`` is left out."""
        n = np.arange(cutoff)
        p = (nbar / (nbar + 1.0)) ** n / (nbar + 1.0)
        return cls(np.diag(p).astype(complex), trunc_budget=max(1e-10, 1.0 - p.sum()))

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def normalized(self) -> FockDensityMatrix:
        """Copy rescaled to unit trace; the removed deficit goes to ``discarded``."""
        tr = self.trace()
        if tr <= 0:
            raise InvariantViolation("cannot normalize a matrix with non-positive trace")
        return FockDensityMatrix(self.matrix / tr, self.trunc_budget, self.discarded + (1.0 - tr))

    def validate(self) -> None:
        herr = self.hermiticity_error()
        if herr > HERMITIAN_TOL:
            raise InvariantViolation(f"matrix is not Hermitian (max deviation {herr:.3g})")
        tr = self.trace()
        if not 1.0 - self.trunc_budget <= tr <= 1.0 + 1e-12:
            raise InvariantViolation(
                f"trace {tr!r} outside [1 - {self.trunc_budget:g}, 1 + 1e-12]")
        lam_min = float(np.linalg.eigvalsh(self.matrix)[0])
        if lam_min < -PSD_TOL:
            raise InvariantViolation(f"negative eigenvalue {lam_min:.3g}")


def accumulate_coherent_mixture(rho: FockDensityMatrix, alphas, weights) -> FockDensityMatrix:
    """``rho + sum_k w_k |alpha_k><alpha_k|`` restricted to ``rho.cutoff``."""
    weights = np.asarray(weights, dtype=float).ravel()
    if np.any(weights < 0):
        raise DomainError("mixture weights must be non-negative")
    logmag, phase = coherent_log_amplitudes(np.asarray(alphas).ravel(), rho.cutoff)
    amps = np.exp(logmag) * np.exp(1j * phase)
    update = (amps * weights) @ amps.conj().T
    update = 0.5 * (update + update.conj().T)
    return FockDensityMatrix(rho.matrix + update, rho.trunc_budget, rho.discarded)


def accumulate_coherent_projector(rho: FockDensityMatrix, alpha: complex,
                                  weight: float) -> FockDensityMatrix:
    """``rho + weight |alpha><alpha|`` restricted to ``rho.cutoff``."""
    if not weight >= 0:
        raise DomainError(f"weight must be non-negative, got {weight}")
    return accumulate_coherent_mixture(rho, [alpha], [weight])


def entropy_from_eigenvalues(lam) -> float:
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > EIG_CLAMP]
    return float(-np.sum(lam * np.log2(lam)))


def fock_entropy(rho: FockDensityMatrix) -> float:
    """von Neumann entropy ``-Tr rho log2 rho`` by Hermitian diagonalization."""
    herr = rho.hermiticity_error()
    if herr > HERMITIAN_TOL:
        raise InvariantViolation(f"matrix is not Hermitian (max deviation {herr:.3g})")
    m = rho.matrix
    if np.iscomplexobj(m) and not np.any(m.imag):
        m = m.real
    return entropy_from_eigenvalues(np.linalg.eigvalsh(m))


# --------------------------------------------------------------------------
# Gaussian states
# --------------------------------------------------------------------------

def g_function(nbar: float) -> float:
    """Entropy in bits of a thermal state with mean photon number ``nbar``."""
    if not nbar >= 0:
        raise DomainError(f"mean photon number must be non-negative, got {nbar}")
    if nbar == 0:
        return 0.0
    return (nbar + 1.0) * math.log2(nbar + 1.0) - nbar * math.log2(nbar)


@dataclass(frozen=True)
class GaussianStateCM:
    """Single-mode Gaussian state: quadrature mean and covariance matrix,
    normalized so that the vacuum covariance is the identity."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    cov: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(2))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float).reshape(2, 2))

    @classmethod
    def coherent(cls, alpha: complex) -> GaussianStateCM:
        return cls(np.array([2 * alpha.real, 2 * alpha.imag]), np.eye(2))

    @classmethod
    def thermal(cls, nbar: float) -> GaussianStateCM:
        return cls(np.zeros(2), (2 * nbar + 1) * np.eye(2))

    def symplectic_eigenvalue(self) -> float:
        c = self.cov
        if abs(c[0, 1] - c[1, 0]) > 1e-12 * max(1.0, abs(c).max()):
            raise UnphysicalStateError("covariance matrix is not symmetric")
        det = float(np.linalg.det(c))
        if det < 1.0 - 1e-10 or c[0, 0] <= 0:
            raise UnphysicalStateError(f"det(cov) = {det!r} violates the uncertainty bound")
        return math.sqrt(max(det, 1.0))

    def mean_photon_number(self) -> float:
        """``<a^dag a>``, including the displacement."""
        return 0.25 * (np.trace(self.cov) - 2.0 + self.mean @ self.mean)


def gaussian_entropy(state: GaussianStateCM) -> float:
    """Entropy ``g((nu - 1)/2)`` from the symplectic eigenvalue ``nu``."""
    nu = state.symplectic_eigenvalue()
    return g_function(0.5 * (nu - 1.0))
