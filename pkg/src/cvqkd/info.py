"""Mutual informations for the homodyne (closed form) and photon-number-
resolving (quadrature) receivers, and the LO threshold above which PNR
detection beats homodyne detection.

Quadrature grids may be *tilted*: nodes and weights integrate against
``N(0, sigma2) (x) N(0, sigma2) * exp(-tilt (x^2 + y^2))`` and every integrand
is multiplied back by ``exp(tilt (x^2 + y^2))`` (``QuadratureGrid.log_comp``).
A product of Poisson likelihoods with total mean ``eta |alpha|^2 + beta^2``
carries the factor ``exp(-eta |alpha|^2)``, so with ``tilt = eta`` the count
marginals become polynomial integrals that Gauss-Hermite evaluates exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, special, stats

from .channel import ProtocolParams, photocount_means
from .errors import DegenerateDistributionError, DomainError, NoThresholdError
from .quantum import TruncationPolicy, cutoff_from_survival, log_poisson, poisson_entropy

LN2 = math.log(2.0)
# numpy's Hermite rule overflows somewhere above order 360
MAX_ORDER = 256


@dataclass(frozen=True)
class Numerics:
    """Numerical settings shared by every rate computation.

    ``cutoff_scale`` multiplies every Fock-basis cutoff chosen by the
    truncation policy; it exists for convergence studies.
    """

    order: int = 64
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    cutoff_scale: int = 1


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureGrid:
    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray
    order: int
    sigma2: float
    tilt: float = 0.0

    @property
    def log_comp(self) -> np.ndarray:
        """Log of the factor undoing the tilt at each node."""
        return self.tilt * (self.x * self.x + self.y * self.y)

    @property
    def nodes(self) -> list[tuple[float, float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist(), self.weight.tolist()))

    def __len__(self) -> int:
        return self.weight.size


def _hermite_rule(order: int, variance: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.hermite_e.hermegauss(order)
    # enforce exact mirror symmetry of nodes and weights
    t = 0.5 * (t - t[::-1])
    w = 0.5 * (w + w[::-1])
    return math.sqrt(variance) * t, w / w.sum()


def build_grid(sigma2: float, order: int = 64, tilt: float = 0.0) -> QuadratureGrid:
    """Tensor-product Gauss-Hermite grid for two independent N(0, sigma2)
    quadratures, optionally tilted by ``exp(-tilt r^2)`` (see module doc)."""
    if order < 8 or order % 2 or order > MAX_ORDER:
        raise DomainError(f"quadrature order must be even and in [8, {MAX_ORDER}], got {order}")
    if not sigma2 > 0:
        raise DegenerateDistributionError(f"sigma2 must be positive, got {sigma2}")
    if not tilt >= 0:
        raise DomainError(f"tilt must be non-negative, got {tilt}")
    var = 1.0 / (1.0 / sigma2 + 2.0 * tilt)
    z, w = _hermite_rule(order, var)
    w = w * math.sqrt(var / sigma2)
    x, y = np.meshgrid(z, z, indexing="ij")
    return QuadratureGrid(x.ravel(), y.ravel(), np.outer(w, w).ravel(), order, sigma2, tilt)


def default_grid(params: ProtocolParams, order: int = 64) -> QuadratureGrid:
    """Grid tilted for Bob's count marginals at transmissivity ``params.eta``."""
    return build_grid(params.sigma2, order, tilt=params.eta)


def log_count_tables(grid: QuadratureGrid, params: ProtocolParams, dims: tuple[int, int],
                     comp_share: float = 0.5):
    """Log of the per-node Poisson likelihood tables, shapes
    ``(dims[0], nodes)`` and ``(dims[1], nodes)``.

    Each table carries ``comp_share`` of the tilt compensation, so with the
    default ``sum_k w_k P1[n, k] P2[m, k]`` is ``p(n, m)``.
    """
    means = photocount_means(grid.x, grid.y, params)
    share = comp_share * grid.log_comp
    l1 = log_poisson(np.arange(dims[0])[:, None], means.mu1) + share
    l2 = log_poisson(np.arange(dims[1])[:, None], means.mu2) + share
    return l1, l2


def count_tables(grid: QuadratureGrid, params: ProtocolParams, dims: tuple[int, int],
                 comp_share: float = 0.5):
    """Exponentiated :func:`log_count_tables`."""
    l1, l2 = log_count_tables(grid, params, dims, comp_share)
    return np.exp(l1), np.exp(l2)


# --------------------------------------------------------------------------
# Count supports and marginals
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CountSupport:
    """Rectangular support ``[0, n_dim) x [0, m_dim)`` of Bob's count pairs."""

    n_dim: int
    m_dim: int
    captured_mass: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_dim, self.m_dim

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(n, m) for n in range(self.n_dim) for m in range(self.m_dim)]

    def __contains__(self, cell) -> bool:
        n, m = cell
        return 0 <= n < self.n_dim and 0 <= m < self.m_dim


@dataclass(frozen=True)
class JointCountTable:
    """Marginal law ``p(n, m)`` of Bob's counts over a ``CountSupport``."""

    p: np.ndarray
    support: CountSupport

    def __getitem__(self, cell) -> float:
        return float(self.p[cell])

    def total(self) -> float:
        return float(self.p.sum())

    def entropy(self) -> float:
        """Shannon entropy in bits of the (truncated) table."""
        return _entropy_nats(self.p) / LN2


def _entropy_nats(p: np.ndarray) -> float:
    return float(-np.sum(special.xlogy(p, p)))


def count_support(params: ProtocolParams, policy: TruncationPolicy = TruncationPolicy(),
                  grid: QuadratureGrid | None = None) -> CountSupport:
    """Choose count cutoffs from the quadrature-averaged Poisson tails.

    Each detector gets half the tail budget, so by the union bound the
    rectangle captures at least ``1 - tail_mass`` of the count law.
    """
    order = 64 if grid is None else grid.order
    if grid is None:
        grid = default_grid(params, order)
    # survival functions carry no Gaussian factor, so average on an untilted rule
    plain = build_grid(params.sigma2, order) if grid.tilt else grid
    means = photocount_means(plain.x, plain.y, params)
    keep = plain.weight > 1e-300
    w = plain.weight[keep]

    def survival(mu):
        return lambda n: stats.poisson.sf(n[:, None], mu[keep][None, :]) @ w

    n_dim = cutoff_from_survival(survival(means.mu1), policy, 0.5 * policy.tail_mass)
    m_dim = cutoff_from_survival(survival(means.mu2), policy, 0.5 * policy.tail_mass)
    p1, p2 = count_tables(grid, params, (n_dim, m_dim))
    captured = float(np.sum(grid.weight * p1.sum(axis=0) * p2.sum(axis=0)))
    return CountSupport(n_dim, m_dim, captured)


def pnr_count_marginal(params: ProtocolParams, grid: QuadratureGrid,
                       support: CountSupport) -> JointCountTable:
    """``p(n, m) = E_{x,y}[P(n; mu1) P(m; mu2)]`` on the support."""
    p1, p2 = count_tables(grid, params, support.shape)
    return JointCountTable((p1 * grid.weight) @ p2.T, support)


# --------------------------------------------------------------------------
# PNR mutual information
# --------------------------------------------------------------------------

def expected_mu_log_mu(variance: float, beta: float) -> float:
    """``E[mu ln mu]`` for ``mu = |u|^2 / 2`` with ``u`` complex Gaussian of
    mean modulus ``beta`` and variance ``variance`` per real component.

    ``|u|^2 / (2 variance)`` is a Poisson(lambda/2) mixture of Gamma(j + 1)
    laws with ``lambda = beta^2 / variance``, and
    ``E[T ln T] = k psi(k + 1)`` for ``T ~ Gamma(k)``.
    """
    if variance == 0:
        mu = 0.5 * beta * beta
        return mu * math.log(mu) if mu > 0 else 0.0
    half_lam = 0.5 * beta * beta / variance
    if half_lam > 1e8:
        # nearly deterministic mu: second-order delta expansion, error O(variance^2)
        mean = 0.5 * beta * beta + variance
        return mean * math.log(mean) + (variance * variance + variance * beta * beta) / (2.0 * mean)
    spread = 12.0 * math.sqrt(half_lam) + 40.0
    j = np.arange(max(0, int(half_lam - spread)), int(half_lam + spread) + 1)
    k = j + 1.0
    pj = stats.poisson.pmf(j, half_lam)
    return float(variance * np.sum(pj * k * (special.digamma(k + 1.0) + math.log(variance))))


def _smooth_poisson_part(mu: np.ndarray) -> np.ndarray:
    """``H(mu) - mu + mu ln mu`` in nats: the entire part of the Poisson entropy."""
    return poisson_entropy(mu, base=math.e) - mu + special.xlogy(mu, mu)


def conditional_count_entropy(params: ProtocolParams, order: int = 64) -> float:
    """``H(L | X)`` in nats for Bob's count pair.

    The Poisson entropy splits into ``mu - mu ln mu`` plus an entire function
    of ``mu``. The first piece is non-analytic where a mean vanishes and is
    integrated in closed form; only the entire remainder uses quadrature.
    """
    s2, eta, beta = params.sigma2, params.eta, params.beta
    exact = (2.0 * eta * s2 + beta * beta) - 2.0 * expected_mu_log_mu(eta * s2, beta)
    plain = build_grid(s2, order)
    means = photocount_means(plain.x, plain.y, params)
    smooth = np.sum(plain.weight * (_smooth_poisson_part(means.mu1) + _smooth_poisson_part(means.mu2)))
    return float(exact + smooth)


def pnr_mutual_info(params: ProtocolParams, grid: QuadratureGrid | None = None,
                    support: CountSupport | None = None,
                    policy: TruncationPolicy = TruncationPolicy()) -> float:
    """``I(X; L)`` in bits between Alice's symbol and Bob's count pair.

    Evaluated as ``H(L) - H(L|X)``: ``H(L)`` from the exact-by-quadrature
    count marginal, ``H(L|X)`` from :func:`conditional_count_entropy`.
    """
    if not params.sigma2 > 0:
        raise DegenerateDistributionError("PNR mutual information needs sigma2 > 0")
    grid = default_grid(params) if grid is None else grid
    support = count_support(params, policy, grid) if support is None else support
    table = pnr_count_marginal(params, grid, support)
    h_l = _entropy_nats(table.p)
    h_l_given_x = conditional_count_entropy(params, grid.order)
    return (h_l - h_l_given_x) / LN2


def pnr_mutual_info_eb(params: ProtocolParams, grid: QuadratureGrid | None = None,
                       support_b: CountSupport | None = None,
                       support_e: CountSupport | None = None,
                       policy: TruncationPolicy = TruncationPolicy(),
                       chunk: int = 2048) -> float:
    """``I(L_E; L_B)`` in bits between Bob's counts (transmissivity eta) and
    Eve's counts from an identical receiver on the tapped mode (1 - eta).

    The four counts are independent given ``(x, y)``; the joint table of the
    two pairs combines ``exp(-eta r^2)`` and ``exp(-(1-eta) r^2)``, so the
    natural grid has tilt 1. Cells of either marginal below 1e-16 and nodes
    carrying less than 1e-20 of the mass are dropped.
    """
    if not params.sigma2 > 0:
        raise DegenerateDistributionError("PNR mutual information needs sigma2 > 0")
    eve = replace(params, eta=1.0 - params.eta)
    grid = build_grid(params.sigma2, 64, tilt=1.0) if grid is None else grid
    support_b = count_support(params, policy, grid) if support_b is None else support_b
    support_e = count_support(eve, policy, grid) if support_e is None else support_e

    b1, b2 = count_tables(grid, params, support_b.shape, comp_share=0.25)
    e1, e2 = count_tables(grid, eve, support_e.shape, comp_share=0.25)
    w = grid.weight
    node_mass = w * b1.sum(0) * b2.sum(0) * e1.sum(0) * e2.sum(0)
    nodes = node_mass > 1e-20 * node_mass.sum()
    w, b1, b2, e1, e2 = w[nodes], b1[:, nodes], b2[:, nodes], e1[:, nodes], e2[:, nodes]

    pb = (b1[:, None, :] * b2[None, :, :]).reshape(-1, w.size)
    pe = (e1[:, None, :] * e2[None, :, :]).reshape(-1, w.size)
    marg_b = pb @ (w * e1.sum(0) * e2.sum(0))
    marg_e = pe @ (w * b1.sum(0) * b2.sum(0))
    pb = pb[marg_b > 1e-16]
    pe = pe[marg_e > 1e-16]
    pe_w = pe * w
    h_joint = 0.0
    rows = np.zeros(pb.shape[0])
    cols = np.zeros(pe.shape[0])
    for start in range(0, pb.shape[0], chunk):
        joint = pb[start:start + chunk] @ pe_w.T
        h_joint -= float(np.sum(special.xlogy(joint, joint)))
        rows[start:start + chunk] = joint.sum(axis=1)
        cols += joint.sum(axis=0)
    mi = _entropy_nats(rows) + _entropy_nats(cols) - h_joint
    return mi / LN2


# --------------------------------------------------------------------------
# Homodyne closed forms
# --------------------------------------------------------------------------

def hd_mutual_info_ab(sigma2: float, eta: float) -> float:
    """``I(A; B)`` for homodyne detection."""
    return 0.5 * math.log2(1.0 + 4.0 * eta * sigma2)


def hd_mutual_info_ae(sigma2: float, eta: float) -> float:
    """``I(A; E)`` for a homodyning eavesdropper on the tapped mode."""
    return 0.5 * math.log2(1.0 + 4.0 * (1.0 - eta) * sigma2)


def hd_mutual_info_eb(sigma2: float, eta: float) -> float:
    """``I(E; B)`` between the two homodyne records."""
    return 0.5 * math.log2((1.0 + 4.0 * eta * sigma2) * (1.0 + 4.0 * (1.0 - eta) * sigma2)
                           / (1.0 + 4.0 * sigma2))


# --------------------------------------------------------------------------
# Threshold
# --------------------------------------------------------------------------

def beta_threshold(sigma2: float, tol: float = 1e-3, grid_order: int = 64,
                   policy: TruncationPolicy = TruncationPolicy()) -> float:
    """Smallest LO amplitude at which lossless PNR detection matches homodyne.

    Brackets the sign change of ``I_PNR(beta) - I_HD`` by doubling from
    ``beta = 0.25`` and refines by bisection to ``tol``.
    """
    if not sigma2 > 0:
        raise DegenerateDistributionError("threshold needs sigma2 > 0")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    hd = hd_mutual_info_ab(sigma2, 1.0)

    def gap(beta: float) -> float:
        params = ProtocolParams(sigma2=sigma2, beta=beta, eta=1.0)
        return pnr_mutual_info(params, default_grid(params, grid_order), policy=policy) - hd

    lo = 0.25
    if gap(lo) >= 0:
        raise NoThresholdError(f"PNR already matches homodyne at beta={lo} (sigma2={sigma2})")
    hi = 2.0 * lo
    while gap(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > 64.0:
            raise NoThresholdError(f"no crossing up to beta=64 (sigma2={sigma2})")
    return float(optimize.bisect(gap, lo, hi, xtol=tol))
