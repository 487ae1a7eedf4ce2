"""Key rates for coherent-state CV-QKD with homodyne or photon-number-resolving receivers."""

__version__ = "0.1.0"

from .adversary import (  # noqa: E402
    Attack,
    Direction,
    KgrComponents,
    KgrPoint,
    RateQuery,
    Scheme,
    compute_kgr,
    holevo_ae_hd,
    holevo_ae_pnr,
    holevo_eb_hd,
    holevo_eb_pnr,
    kgr_collective,
    kgr_individual,
    rho_e_unconditional,
)
from .channel import ProtocolParams, photocount_means  # noqa: E402
from .info import (  # noqa: E402
    Numerics,
    beta_threshold,
    hd_mutual_info_ab,
    hd_mutual_info_ae,
    hd_mutual_info_eb,
    pnr_mutual_info,
    pnr_mutual_info_eb,
)
from .montecarlo import McEstimate, mc_mutual_info  # noqa: E402
from .quantum import (  # noqa: E402
    FockDensityMatrix,
    GaussianStateCM,
    TruncationPolicy,
    fock_entropy,
    g_function,
    gaussian_entropy,
)

__all__ = [
    "Attack", "Direction", "FockDensityMatrix", "GaussianStateCM", "KgrComponents", "KgrPoint",
    "McEstimate", "Numerics", "ProtocolParams", "RateQuery", "Scheme", "TruncationPolicy",
    "beta_threshold", "compute_kgr", "fock_entropy", "g_function", "gaussian_entropy",
    "hd_mutual_info_ab", "hd_mutual_info_ae", "hd_mutual_info_eb", "holevo_ae_hd",
    "holevo_ae_pnr", "holevo_eb_hd", "holevo_eb_pnr", "kgr_collective", "kgr_individual",
    "mc_mutual_info", "photocount_means", "pnr_mutual_info", "pnr_mutual_info_eb",
    "rho_e_unconditional",
]
