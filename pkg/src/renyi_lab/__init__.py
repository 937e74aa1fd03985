"""Sandwiched and alpha-z Renyi divergences, truncation ladders and hypothesis-testing exponents."""

from .discrimination import (
    Channel,
    ClassicalPair,
    Povm,
    classical_divergence,
    dmax_two_outcome,
    dpi_check,
    generalized_errors,
    hoeffding_dpi_check,
    measured_lower_bound,
    measured_renyi,
    np_sweep,
    sc_exponent_estimate,
    transpose_identity_gap,
)
from .divergences import (
    cond_entropy_down,
    cond_entropy_up,
    d_alpha_z,
    d_max,
    d_petz,
    d_sandwiched,
    d_tilde,
    lambda_min_dominance,
    log_q_alpha_z,
    q_alpha_z,
    relative_entropy,
    renyi_entropy,
    rho_sigma_alpha_z,
)
from .hoeffding import (
    bipolar_recover,
    cutoff_from_exponents,
    cutoff_rate,
    hoeffding_anti,
    psi_curve,
    tensor_power_hoeffding,
    tensor_power_psi,
)
from .operators import (
    DiagonalModel,
    compress,
    fractional_power,
    partial_trace,
    realize,
    schatten_norm,
    spectral_decompose,
    spectral_truncation,
    support_leq,
    support_projection,
    zeta_series,
)
from .truncation import (
    alpha_limit_to_dmax,
    contraction_vs_projection_check,
    escape_projections,
    ladder,
    minimax_exchange_check,
    q_fa_estimate,
)
from .types import (
    AlphaZ,
    ExtendedValue,
    InvalidInputError,
    InvalidWitnessError,
    NumericalError,
    SpectralData,
)
from .variational import (
    dominance_witnesses,
    eval_F,
    eval_G,
    logq_var_objective,
    optimizer_H,
    q_var_objective,
    var_certificate,
)

__version__ = "0.1.0"
