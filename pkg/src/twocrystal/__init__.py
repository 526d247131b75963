"""Single-excitation simulator for two-crystal down-conversion interference."""

from twocrystal.errors import (
    ConfigError,
    InvalidCoupling,
    InvalidGrid,
    InvalidModeSet,
    InvalidParams,
    InvalidRate,
    InvalidSelection,
    IoError,
    SimulationError,
    WrongCase,
)
from twocrystal.fock_core import (
    CouplingTable,
    DcCoefficients,
    SectorState,
    apply_to_pair,
    apply_to_uv,
    apply_unitary,
    brute_force_unitary,
    build_coupling_table,
    closed_form_unitary,
    dc_coefficients,
)
from twocrystal.experiment import (
    ExperimentARates,
    ExperimentBResult,
    ExperimentConfig,
    enhancement_decomposition,
    experiment_a_rates,
    input_state_b,
    phase_scan,
    quench_analysis,
    run_experiment_b,
    uv_channel_balance,
)
from twocrystal.timeline import (
    Origin,
    TimelineEvent,
    TimelineStats,
    TimescaleParams,
    coincidence_monte_carlo,
    derive_timescales,
    simulate_timeline,
    timeline_stats,
)

__version__ = "0.1.0"
