"""Exclusion-zone design for D2D-underlaid massive MIMO uplinks."""

from .analytics import (
    AnalyticReport,
    DerivedDensities,
    ExclusionDesign,
    NetworkConfig,
    TrainingMode,
    analytic_report,
    avg_bs_interference,
    avg_cell_sinr,
    avg_d2d_sinr,
    d2d_interference,
    dbm_to_watt,
    derived_densities,
    mse_per_antenna,
    mse_total,
    watt_to_dbm,
)
from .geometry import (
    Annulus,
    HexLayout,
    Mode,
    PointSet,
    campbell_moment,
    classify_mode,
    classify_modes,
    hex_layout,
    sample_ppp,
    thin_hole_process,
)
from .montecarlo import (
    DropRealization,
    MonteCarloEstimate,
    Quantity,
    SweepResult,
    generate_drop,
    generate_drops,
    run_sweep,
)
from .optimizer import (
    ObjectiveContext,
    OptimizationResult,
    OracleResult,
    QuasiConcavityReport,
    Status,
    brute_force_oracle,
    constraint_g,
    frontier_c,
    kkt_residuals,
    log_objective,
    solve,
    verify_quasiconcavity,
)

__version__ = "0.1.0"
