"""Trickle propagation lab: protocol simulator, renewal analytics, exact laws."""

from .core import (
    Message,
    NodeState,
    Reaction,
    TAU_INFINITE,
    TrickleParams,
    needs_new_interval,
    on_interval_end,
    on_message,
    on_timer,
    quiet_state,
    receive_message,
    start_interval,
)
from .analytics import (
    AsymptoticStats,
    MarkovModel,
    asymptotic_stats,
    build_markov,
    cov_update_sizes,
    delay_rate,
    delta_covariance,
    gamma_theta_sq,
    gamma_U_sq,
    hop_rate,
    mean_inter_transmission,
    mean_update_size,
    minimize_delay_variance,
    normal_approx,
    sigma_H_sq,
    sigma_T_sq,
)
from .series import TruncatedSeries, geometric
from .gf import (
    FirstPassageGF,
    StepTimeMGF,
    TruncationInsufficientError,
    delay_moments_dp,
    delay_moments_gf,
    hop_pmf_dp,
    hop_pmf_gf,
    solve_delay_system,
    solve_hop_system,
    step_mgf,
    step_moment,
)
from .simulate import (
    DegenerateInputError,
    LineTopology,
    NonTerminationError,
    PropagationTrace,
    SampleSet,
    estimate_time_variance_rate,
    ks_distance,
    monte_carlo,
    run_protocol_event,
    sample_renewal_event,
    validate_wavefront,
)

__version__ = "0.1.0"
