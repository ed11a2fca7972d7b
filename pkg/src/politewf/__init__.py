"""Transmit covariance optimization for MIMO B-MAC interference networks.

Feasibility (max-min scaled rates under a power budget) and sum-power
minimization (under per-link rate targets) for one-hop networks mixing
broadcast and multiaccess sides, built on SINR/rate duality and polite
water-filling.  Centralized solvers, a simulated distributed solver,
DPC/SIC order improvement, and a reproducible scenario harness.
"""

from .network import (
    CovarianceSet,
    EncodingOrder,
    NetworkSpec,
    PseudoGroups,
    all_link_rates,
    coupling_from_order,
    interference_covariance,
    is_itree,
    link_rate,
    permute_network,
    pseudo_groups,
    reverse_network,
    sub_network,
    validate_coupling,
    whiten,
    with_coupling,
)
from .streams import (
    StreamStrategy,
    crosstalk,
    decompose_eigen,
    equal_power_precoder,
    equal_sinr_precoder,
    forward_sinrs,
    mmse_sic_receivers,
    reverse_mmse_transmitters,
    reverse_sinrs,
    stream_gains,
    strategy_from_scaled,
    sum_stream_rates,
)
from .duality import DualScaling, InfeasibleTargetsError, covariance_transformation, dual_powers, forward_powers
from .waterfill import (
    EquivalentChannel,
    PwfDecomposition,
    assemble_forward,
    assemble_reverse,
    equivalent_channel,
    polite_waterfill,
    pwf_residual,
    structure_residual,
    waterfill_power,
    waterfill_rate,
)
from .solvers import (
    IterateRecord,
    OptimalityReport,
    SolveReport,
    Targets,
    algorithm_a,
    algorithm_b,
    algorithm_o,
    algorithm_pr,
    algorithm_pr1,
    check_optimality,
    fop_via_pr1,
    stream_targets,
)
from .distributed import PrdRound, run_prd
from .scenario import PRESETS, RunRecord, Scenario, batch, build_network, generate_scenario, region, run, trace_csv

__version__ = "0.1.0"

__all__ = [
    "CovarianceSet", "EncodingOrder", "NetworkSpec", "PseudoGroups",
    "all_link_rates", "coupling_from_order", "interference_covariance", "is_itree",
    "link_rate", "permute_network", "pseudo_groups", "reverse_network", "sub_network",
    "validate_coupling", "whiten", "with_coupling",
    "StreamStrategy", "crosstalk", "decompose_eigen", "equal_power_precoder",
    "equal_sinr_precoder", "forward_sinrs", "mmse_sic_receivers",
    "reverse_mmse_transmitters", "reverse_sinrs", "stream_gains",
    "strategy_from_scaled", "sum_stream_rates",
    "DualScaling", "InfeasibleTargetsError", "covariance_transformation",
    "dual_powers", "forward_powers",
    "EquivalentChannel", "PwfDecomposition", "assemble_forward", "assemble_reverse",
    "equivalent_channel", "polite_waterfill", "pwf_residual", "structure_residual",
    "waterfill_power", "waterfill_rate",
    "IterateRecord", "OptimalityReport", "SolveReport", "Targets",
    "algorithm_a", "algorithm_b", "algorithm_o", "algorithm_pr", "algorithm_pr1",
    "check_optimality", "fop_via_pr1", "stream_targets",
    "PrdRound", "run_prd",
    "PRESETS", "RunRecord", "Scenario", "batch", "build_network",
    "generate_scenario", "region", "run", "trace_csv",
]
