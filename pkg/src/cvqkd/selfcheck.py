"""Oracle-agreement checks run by ``cvqkd selfcheck``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .adversary import (
    eve_cutoff,
    eve_state_given_homodyne,
    eve_state_given_x,
    holevo_eb_pnr_breakdown,
    rho_e_unconditional,
)
from .channel import ProtocolParams
from .info import Numerics, default_grid, pnr_mutual_info
from .montecarlo import CoherentEnsemble, mc_mutual_info, quadrature_fock_entropy
from .quantum import (
    FockDensityMatrix,
    GaussianStateCM,
    fock_entropy,
    g_function,
    gaussian_entropy,
    thermal_cutoff,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.tolerance)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name}: delta={self.measured:.3e} tol={self.tolerance:.1e}"


def thermal_entropy_agreement() -> float:
    worst = 0.0
    for nbar in (0.5, 1.0, 2.0, 4.0):
        rho = FockDensityMatrix.thermal(nbar, thermal_cutoff(nbar))
        worst = max(worst, abs(fock_entropy(rho) - gaussian_entropy(GaussianStateCM.thermal(nbar))))
    return worst


def eve_given_x_agreement(etas=(0.3, 0.5, 0.8), sigma2: float = 2.0, order: int = 96) -> float:
    worst = 0.0
    for eta in etas:
        params = ProtocolParams(sigma2=sigma2, eta=eta)
        fock = quadrature_fock_entropy(CoherentEnsemble.eve_given_x(params, 0.4), order,
                                       eve_cutoff(params))
        worst = max(worst, abs(fock - gaussian_entropy(eve_state_given_x(params))))
    return worst


def eve_unconditional_agreement(etas=(0.3, 0.5, 0.8), sigma2: float = 2.0) -> float:
    worst = 0.0
    for eta in etas:
        params = ProtocolParams(sigma2=sigma2, eta=eta)
        rho, _ = rho_e_unconditional(params)
        worst = max(worst, abs(fock_entropy(rho.normalized()) - g_function(2 * (1 - eta) * sigma2)))
    return worst


def homodyne_conditioning_agreement(etas=(0.3, 0.7), sigma2: float = 2.0,
                                    outcome: float = 0.7, order: int = 96) -> float:
    worst = 0.0
    for eta in etas:
        params = ProtocolParams(sigma2=sigma2, eta=eta)
        fock = quadrature_fock_entropy(CoherentEnsemble.eve_given_homodyne(params, outcome),
                                       order, eve_cutoff(params))
        worst = max(worst, abs(fock - gaussian_entropy(eve_state_given_homodyne(params))))
    return worst


def mixture_reconstruction(eta: float = 0.5) -> float:
    params = ProtocolParams(sigma2=2.0, beta=2.0, eta=eta)
    hb = holevo_eb_pnr_breakdown(params, keep_mixture=True)
    rho, _ = rho_e_unconditional(params, hb.cutoff)
    return float(np.abs(hb.mixture - rho.matrix).max())


def mc_agreement(eta: float, num_samples: int, seed: int = 0) -> tuple[float, float]:
    params = ProtocolParams(sigma2=2.0, beta=2.0, eta=eta)
    quad = pnr_mutual_info(params, default_grid(params, Numerics().order))
    est = mc_mutual_info(params, num_samples, seed)
    return abs(est.value - quad), max(3.0 * est.stderr, 1e-2)


def run_checks(fast: bool = False, tolerance: float | None = None, seed: int = 0,
               report: Callable[[str], None] = print) -> list[CheckResult]:
    """Run every check, reporting one line each; ``tolerance`` overrides all
    tolerances (used to show the checks are live)."""
    samples = 10**6 if fast else 10**7
    plan = [
        ("thermal states: Fock vs Gaussian entropy", thermal_entropy_agreement, 1e-4),
        ("rho_E|x: Fock vs Gaussian entropy", eve_given_x_agreement, 1e-4),
        ("rho_E: Fock mixture vs g(2(1-eta)sigma2)", eve_unconditional_agreement, 1e-4),
        ("rho_E|x_B: importance-weighted Fock vs Gaussian", homodyne_conditioning_agreement, 1e-3),
        ("sum_nm p rho_E|nm = rho_E (entrywise)", mixture_reconstruction, 1e-8),
    ]
    results = []
    for name, fn, tol in plan:
        results.append(CheckResult(name, fn(), tol if tolerance is None else tolerance))
        report(results[-1].line())
    for eta in (0.5, 1.0):
        delta, tol = mc_agreement(eta, samples, seed)
        results.append(CheckResult(f"I(X;L) quadrature vs MC ({samples:.0e} samples, eta={eta})",
                                   delta, tol if tolerance is None else tolerance))
        report(results[-1].line())
    return results
