"""Mean-field transmission power control for dense uplink networks.

Computes equilibria of the uplink power game under CDMA (uniform
interference, single-user decoding) and power-domain NOMA (ordered
interference, successive interference cancellation), and compares them.
"""

from mfpc.channel import (
    BoundedUniform,
    Population,
    RayleighSquared,
    Tabulated,
    empirical_mean_gain,
    first_moment,
    load_tabulated,
    sample_population,
)
from mfpc.game import (
    Protocol,
    ProtocolParams,
    best_response,
    data_rate,
    interference,
    interference_cdma,
    interference_noma,
    project_power,
    utility,
)
from mfpc.solver import (
    EquilibriumResult,
    InvalidAlphaError,
    NonConvergenceError,
    SolverConfig,
    residual_norm,
    solve,
    verify_fixed_point,
)
from mfpc.welfare import (
    crossing_detect,
    high_gain_gap_check,
    jains_index,
    social_welfare,
    welfare_dominance_check,
)

__version__ = "0.1.0"

__all__ = [
    "BoundedUniform",
    "EquilibriumResult",
    "InvalidAlphaError",
    "NonConvergenceError",
    "Population",
    "Protocol",
    "ProtocolParams",
    "RayleighSquared",
    "SolverConfig",
    "Tabulated",
    "best_response",
    "crossing_detect",
    "data_rate",
    "empirical_mean_gain",
    "first_moment",
    "high_gain_gap_check",
    "interference",
    "interference_cdma",
    "interference_noma",
    "jains_index",
    "load_tabulated",
    "project_power",
    "residual_norm",
    "sample_population",
    "social_welfare",
    "solve",
    "utility",
    "verify_fixed_point",
    "welfare_dominance_check",
]
