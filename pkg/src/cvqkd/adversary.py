"""Key generation rates against individual and collective attacks.

Eve holds the mode reflected by the lossy channel, a coherent state of
amplitude ``sqrt(1 - eta) (x + iy)``. Collective attacks bound her
information by Holevo quantities built from conditional states of that mode.
Bob never measures collectively.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ProtocolParams, eve_tap_amplitude
from .errors import (
    DegenerateDistributionError,
    DomainError,
    NegligibleOutcomeError,
    TruncationSaturationWarning,
)
from .info import (
    CountSupport,
    Numerics,
    QuadratureGrid,
    build_grid,
    count_support,
    log_count_tables,
    default_grid,
    hd_mutual_info_ab,
    hd_mutual_info_ae,
    hd_mutual_info_eb,
    pnr_count_marginal,
    pnr_mutual_info,
    pnr_mutual_info_eb,
)
from .quantum import (
    FockDensityMatrix,
    GaussianStateCM,
    coherent_log_amplitudes,
    entropy_from_eigenvalues,
    fock_entropy,
    g_function,
    gaussian_entropy,
    thermal_cutoff,
)


class Scheme(str, enum.Enum):
    HD = "hd"
    PNR = "pnr"


class Attack(str, enum.Enum):
    INDIVIDUAL = "individual"
    COLLECTIVE = "collective"


class Direction(str, enum.Enum):
    DIRECT = "dr"
    REVERSE = "rr"


@dataclass(frozen=True)
class RateQuery:
    scheme: Scheme
    attack: Attack
    direction: Direction
    params: ProtocolParams
    numerics: Numerics = field(default_factory=Numerics)

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "attack", Attack(self.attack))
        object.__setattr__(self, "direction", Direction(self.direction))


@dataclass(frozen=True)
class KgrComponents:
    """The two informations whose difference is the key rate.

    ``error_bar`` is a one-sided bound (bits) on how much truncated count
    mass could have lowered ``second``; ``warnings`` lists truncation
    saturations and skipped outcomes met while computing the point.
    """

    first: float
    second: float
    first_label: str
    second_label: str
    error_bar: float = 0.0
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class KgrPoint:
    eta: float
    delta_i: float
    components: KgrComponents

    @classmethod
    def from_components(cls, eta: float, components: KgrComponents) -> KgrPoint:
        return cls(eta, components.first - components.second, components)

    @property
    def secure(self) -> bool:
        return self.delta_i > 0


# --------------------------------------------------------------------------
# Eve's states
# --------------------------------------------------------------------------

def eve_cutoff(params: ProtocolParams, numerics: Numerics = Numerics()) -> int:
    """Fock cutoff for Eve's mode, from the thermal law of her unconditional
    state, times ``numerics.cutoff_scale``."""
    return numerics.cutoff_scale * thermal_cutoff(eve_mean_photons(params), numerics.policy)


def eve_mean_photons(params: ProtocolParams) -> float:
    return 2.0 * (1.0 - params.eta) * params.sigma2


def _eve_amplitude_matrix(grid: QuadratureGrid, eta: float, cutoff: int):
    """Real and imaginary parts of ``<j|sqrt(1-eta)(x+iy)>`` on the grid."""
    logmag, phase = coherent_log_amplitudes(eve_tap_amplitude(grid.x, grid.y, eta), cutoff)
    mag = np.exp(logmag)
    return mag * np.cos(phase), mag * np.sin(phase)


def _weighted_gram(re: np.ndarray, im: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``Re sum_k c_k |psi_k><psi_k|`` for a node set closed under y -> -y,
    where the imaginary part cancels exactly."""
    return (re * c) @ re.T + (im * c) @ im.T


def _rotate(matrix: np.ndarray, phi: float) -> np.ndarray:
    """Apply the phase rotation ``exp(i phi a^dag a)`` to a frame-0 matrix."""
    if phi == 0:
        return matrix.astype(complex)
    j = np.arange(matrix.shape[0])
    phase = np.exp(1j * phi * (j[:, None] - j[None, :]))
    return matrix * phase


def rho_e_unconditional(params: ProtocolParams, cutoff: int | None = None,
                        numerics: Numerics = Numerics()):
    """Eve's averaged state, as a quadrature-built Fock matrix and as the
    thermal Gaussian state with covariance ``(1 + 4(1-eta) sigma2) I``.

    Returns ``(FockDensityMatrix, GaussianStateCM)``.
    """
    gaussian = GaussianStateCM.thermal(eve_mean_photons(params))
    cutoff = eve_cutoff(params, numerics) if cutoff is None else cutoff
    if params.eta == 1.0 or params.sigma2 == 0:
        return FockDensityMatrix.vacuum(cutoff), gaussian
    grid = build_grid(params.sigma2, numerics.order, tilt=1.0 - params.eta)
    re, im = _eve_amplitude_matrix(grid, params.eta, cutoff)
    c = grid.weight * np.exp(grid.log_comp)
    rho = _weighted_gram(re, im, c)
    rho = 0.5 * (rho + rho.T)
    return FockDensityMatrix(rho.astype(complex), trunc_budget=numerics.policy.tail_mass), gaussian


def eve_state_given_x(params: ProtocolParams) -> GaussianStateCM:
    """Eve's state once Alice's x is fixed and y averaged out (HD protocol)."""
    return GaussianStateCM(np.zeros(2), np.diag([1.0, 1.0 + 4.0 * (1.0 - params.eta) * params.sigma2]))


def eve_state_given_homodyne(params: ProtocolParams) -> GaussianStateCM:
    """Eve's state conditioned on Bob's homodyne outcome on x.

    Bob's outcome is ``sqrt(eta) x`` plus vacuum noise of variance 1/4, so the
    posterior of x has variance ``sigma2 / (1 + 4 eta sigma2)``; y keeps its
    prior. The covariance does not depend on the outcome value.
    """
    s2, eta = params.sigma2, params.eta
    post = s2 / (1.0 + 4.0 * eta * s2)
    return GaussianStateCM(np.zeros(2), np.diag([1.0 + 4.0 * (1.0 - eta) * post,
                                                 1.0 + 4.0 * (1.0 - eta) * s2]))


def holevo_ae_hd(params: ProtocolParams) -> float:
    """``chi(A; E)`` for the homodyne protocol (y discarded by sifting)."""
    s_e = g_function(eve_mean_photons(params))
    return s_e - gaussian_entropy(eve_state_given_x(params))


def holevo_ae_pnr(params: ProtocolParams) -> float:
    """``chi(A; E)`` for the PNR protocol: Eve's conditionals are pure."""
    return g_function(eve_mean_photons(params))


def holevo_eb_hd(params: ProtocolParams) -> float:
    """``chi(E; B)`` against Bob's homodyne record."""
    s_e = g_function(eve_mean_photons(params))
    return s_e - gaussian_entropy(eve_state_given_homodyne(params))


def _cell_gram(n: int, m: int, logw: np.ndarray, l1: np.ndarray, l2: np.ndarray,
               re: np.ndarray, im: np.ndarray):
    """Unnormalized frame-0 conditional ``p(n,m) rho_{E|(n,m)}``."""
    logc = logw + l1[n] + l2[m]
    top = logc.max()
    c = np.exp(logc - top)
    keep = c > 1e-16 * c.sum()
    return math.exp(top) * _weighted_gram(re[:, keep], im[:, keep], c[keep])


def _conditional_setup(params: ProtocolParams, grid: QuadratureGrid, dims, cutoff: int):
    frame0 = replace(params, phi=0.0)
    # Bob's likelihoods carry exp(-eta r^2), Eve's amplitudes exp(-(1-eta) r^2)
    l1, l2 = log_count_tables(grid, frame0, dims, comp_share=0.0)
    logw = np.log(grid.weight) + grid.log_comp
    re, im = _eve_amplitude_matrix(grid, params.eta, cutoff)
    return logw, l1, l2, re, im


def _conditional_grid(params: ProtocolParams, order: int) -> QuadratureGrid:
    return build_grid(params.sigma2, order, tilt=1.0)


def conditional_eve_state_pnr(n: int, m: int, params: ProtocolParams,
                              grid: QuadratureGrid | None = None,
                              cutoff: int | None = None,
                              numerics: Numerics = Numerics()) -> FockDensityMatrix:
    """Eve's state given Bob's counts ``(n, m)``, trace-renormalized.

    ``discarded`` on the result is the Fock-truncation deficit removed.
    """
    if n < 0 or m < 0:
        raise DomainError(f"counts must be non-negative, got ({n}, {m})")
    grid = _conditional_grid(params, numerics.order) if grid is None else grid
    cutoff = eve_cutoff(params, numerics) if cutoff is None else cutoff
    p_nm = pnr_count_marginal(params, default_grid(params, grid.order),
                              CountSupport(n + 1, m + 1, float("nan")))[n, m]
    if p_nm < 1e-300:
        raise NegligibleOutcomeError(f"p({n},{m}) = {p_nm:.3g} is negligible")
    setup = _conditional_setup(params, grid, (n + 1, m + 1), cutoff)
    gram = _cell_gram(n, m, *setup)
    rho = FockDensityMatrix(_rotate(0.5 * (gram + gram.T), params.phi) / p_nm,
                            trunc_budget=max(numerics.policy.tail_mass, 1e-8))
    return rho.normalized()


@dataclass(frozen=True)
class HolevoBreakdown:
    """Pieces of ``chi(E; B)`` for the PNR receiver.

    ``skipped_mass`` is the count probability outside the processed cells
    (support tail plus cells below the negligible floor); ``error_bar`` is
    ``skipped_mass * log2(cutoff)``, the most those cells could add to the
    averaged conditional entropy.
    """

    value: float
    s_rho_e: float
    mean_conditional_entropy: float
    skipped_mass: float
    error_bar: float
    cutoff: int
    cells: int
    mixture: np.ndarray | None = None


def holevo_eb_pnr_breakdown(params: ProtocolParams, grid: QuadratureGrid | None = None,
                            support: CountSupport | None = None, cutoff: int | None = None,
                            numerics: Numerics = Numerics(), keep_mixture: bool = False,
                            cell_floor: float = 1e-15) -> HolevoBreakdown:
    """Compute ``chi(E; B) = S[rho_E] - sum p(n,m) S[rho_{E|(n,m)}]``.

    Works in the LO-phase-0 frame (entropies are invariant under the phase
    rotation) where every conditional state is real. Cells ``(n, m)`` and
    ``(m, n)`` are mirror images, so only ``n <= m`` is diagonalized.
    Cells are visited in lexicographic order. With ``keep_mixture`` the
    reconstructed ``sum p rho_{E|(n,m)}`` is returned in the original frame.
    """
    if not params.sigma2 > 0:
        raise DegenerateDistributionError("PNR Holevo bound needs sigma2 > 0")
    cutoff = eve_cutoff(params, numerics) if cutoff is None else cutoff
    rho_e, _ = rho_e_unconditional(params, cutoff, numerics)
    s_e = fock_entropy(rho_e.normalized())
    bob_grid = default_grid(params, numerics.order)
    support = count_support(params, numerics.policy, bob_grid) if support is None else support
    table = pnr_count_marginal(params, bob_grid, support).p
    grid = _conditional_grid(params, numerics.order) if grid is None else grid
    setup = _conditional_setup(params, grid, support.shape, cutoff)

    parity = (-1.0) ** np.arange(cutoff)
    flip = np.outer(parity, parity)
    mixture = np.zeros((cutoff, cutoff)) if keep_mixture else None
    mean_cond = 0.0
    used = 0.0
    cells = 0
    for n in range(support.n_dim):
        for m in range(support.m_dim):
            mirrored = (m, n) in support and n != m
            if mirrored and n > m:
                continue
            p = table[n, m]
            if p < cell_floor:
                continue
            gram = _cell_gram(n, m, *setup)
            gram = 0.5 * (gram + gram.T)
            tr = np.trace(gram)
            if tr <= 0:
                continue
            cond = gram / tr
            s = entropy_from_eigenvalues(np.linalg.eigvalsh(cond))
            mult = 2.0 if mirrored else 1.0
            mean_cond += mult * p * s
            used += mult * p
            cells += int(mult)
            if mixture is not None:
                mixture += p * cond
                if mirrored:
                    mixture += p * cond * flip
    skipped = max(0.0, 1.0 - used)
    value = s_e - mean_cond
    out_mixture = _rotate(mixture, params.phi) if mixture is not None else None
    return HolevoBreakdown(value, s_e, mean_cond, skipped, skipped * math.log2(cutoff),
                           cutoff, cells, out_mixture)


def holevo_eb_pnr(params: ProtocolParams, grid: QuadratureGrid | None = None,
                  support: CountSupport | None = None, cutoff: int | None = None,
                  numerics: Numerics = Numerics()) -> float:
    """``chi(E; B)`` in bits for Bob's photon-number-resolving receiver."""
    return holevo_eb_pnr_breakdown(params, grid, support, cutoff, numerics).value


# --------------------------------------------------------------------------
# Key rates
# --------------------------------------------------------------------------

def kgr_individual(query: RateQuery) -> KgrPoint:
    """Key rate when Eve measures each pulse with the same receiver as Bob."""
    if query.attack is not Attack.INDIVIDUAL:
        raise DomainError("kgr_individual needs an individual-attack query")
    p, num = query.params, query.numerics
    if query.scheme is Scheme.HD:
        first = hd_mutual_info_ab(p.sigma2, p.eta)
        if query.direction is Direction.DIRECT:
            comp = KgrComponents(first, hd_mutual_info_ae(p.sigma2, p.eta), "I(A;B)", "I(A;E)")
        else:
            comp = KgrComponents(first, hd_mutual_info_eb(p.sigma2, p.eta), "I(A;B)", "I(E;B)")
        return KgrPoint.from_components(p.eta, comp)
    first = _pnr_mi(p, num)
    if query.direction is Direction.DIRECT:
        second = _pnr_mi(replace(p, eta=1.0 - p.eta), num)
        comp = KgrComponents(first, second, "I(X;L_B)", "I(X;L_E)")
    else:
        grid = build_grid(p.sigma2, num.order, tilt=1.0)
        second = pnr_mutual_info_eb(p, grid, policy=num.policy)
        comp = KgrComponents(first, second, "I(X;L_B)", "I(L_E;L_B)")
    return KgrPoint.from_components(p.eta, comp)


def _pnr_mi(params: ProtocolParams, numerics: Numerics) -> float:
    if params.eta == 0.0:
        return 0.0
    return pnr_mutual_info(params, default_grid(params, numerics.order), policy=numerics.policy)


def kgr_collective(query: RateQuery) -> KgrPoint:
    """Key rate when Eve stores her modes and measures them jointly."""
    if query.attack is not Attack.COLLECTIVE:
        raise DomainError("kgr_collective needs a collective-attack query")
    p, num = query.params, query.numerics
    if query.scheme is Scheme.HD:
        first = hd_mutual_info_ab(p.sigma2, p.eta)
        if query.direction is Direction.DIRECT:
            comp = KgrComponents(first, holevo_ae_hd(p), "I(A;B)", "chi(A;E)")
        else:
            comp = KgrComponents(first, holevo_eb_hd(p), "I(A;B)", "chi(E;B)")
        return KgrPoint.from_components(p.eta, comp)
    first = _pnr_mi(p, num)
    if query.direction is Direction.DIRECT:
        comp = KgrComponents(first, holevo_ae_pnr(p), "I(X;L)", "chi(A;E)")
    elif p.eta == 1.0:
        comp = KgrComponents(first, 0.0, "I(X;L)", "chi(E;B)")
    else:
        hb = holevo_eb_pnr_breakdown(p, numerics=num)
        comp = KgrComponents(first, hb.value, "I(X;L)", "chi(E;B)", error_bar=hb.error_bar)
    return KgrPoint.from_components(p.eta, comp)


def compute_kgr(query: RateQuery) -> KgrPoint:
    """Dispatch on the attack; truncation warnings raised on the way are
    recorded in the returned components instead of being emitted."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationSaturationWarning)
        if query.attack is Attack.INDIVIDUAL:
            point = kgr_individual(query)
        else:
            point = kgr_collective(query)
    notes = [str(w.message) for w in caught if issubclass(w.category, TruncationSaturationWarning)]
    if point.components.error_bar > 1e-6:
        notes.append(f"discarded count mass bounds chi(E;B) error by {point.components.error_bar:.2e} bits")
    if not notes:
        return point
    comp = replace(point.components, warnings=point.components.warnings + tuple(notes))
    return KgrPoint(point.eta, point.delta_i, comp)
