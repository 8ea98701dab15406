"""Secret-key-rate analysis for memory-based repeater chains with grid-encoded qubits."""

from .amplify import (
    SeriesDivergenceError,
    added_variance,
    cc_threshold_L0,
    expected_added_variance,
    resolve_strategy,
)
from .gkpcode import (
    averaging_error_estimate,
    gamma_threshold,
    hp_min_variance,
    pauli_error_prob,
    pauli_threshold,
    qber,
)
from .model import (
    AmplificationStrategy,
    ConfigError,
    DEFAULT_CONSTANTS,
    DerivedParams,
    PhysicalConstants,
    RepeaterConfig,
    derive,
)
from .montecarlo import (
    MethodComparison,
    SimulationStats,
    compare_methods,
    numeric_average_qber,
    numeric_average_rate,
    simulate_chain,
)
from .protocol import (
    BellLabel,
    DetectionOutcome,
    Syndrome,
    TransferChainReport,
    classify_detection,
    compose_pauli_frame,
    decode_bell_parities,
    distribution_attempt,
    verify_tmsv_chain,
)
from .rates import (
    OptimizeResult,
    RateResult,
    analytic_rate,
    binary_entropy,
    correctionless_rate,
    optimize_n,
    plob_bound,
    secret_fraction,
)
from .stats import (
    WaitingTimePmf,
    avg_total_steps,
    exp_dephasing_mean,
    geom_abs_diff_mean,
    geom_abs_diff_pmf,
    sum_waiting_pmf,
    waiting_pmf_table,
)

__version__ = "0.1.0"
