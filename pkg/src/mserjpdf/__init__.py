"""Minimum-SER reduced-rank adaptive receivers for multiuser antenna arrays.

The package simulates a joint preprocessing, decimation and filtering
receiver adapted under a minimum symbol-error-rate criterion, alongside
full-rank baselines, over time-varying multipath fading channels.
"""

from .adapt import (
    AdaptConfig,
    AutoSelectConfig,
    AutoSelectResult,
    auto_select,
    desired_gain,
    grad_bpsk,
    grad_qam,
    kernel_width,
    prefix_outputs,
    qam_phase_rotate,
    qam_phi,
    ser_estimate_bpsk,
    ser_estimate_qam,
    update_bpsk,
    update_qam,
)
from .baselines import (
    lms_update,
    matched_filter,
    mser_fullrank_update_bpsk,
    mser_fullrank_update_qam,
)
from .channel import (
    VEHICULAR_A_DB,
    ChannelConfig,
    ChannelRealization,
    antenna_sample_series,
    build_channel_matrix,
    clarke_gain_series,
    desired_signature,
    generate_realization,
    received_vector,
    synthesize_received,
    vehicular_a_profile,
)
from .constellations import (
    Constellation,
    draw_symbols,
    quantize,
    quantize_bpsk,
    quantize_qam,
)
from .core import (
    Branch,
    branch_output,
    d_hermitian_apply,
    equiv_d_matrix,
    hankel_matrix,
    prestored_pattern,
    scatter_weights,
    select_branch,
)
from .errors import ConfigError, DegenerateChannelError
from .harness import (
    ExperimentConfig,
    RunSummary,
    emit_results,
    load_config,
    run_experiment,
)
from .metrics import ALGORITHMS, ComplexityReport, SerCurve, complexity, estimate_ser, pcr
from .receivers import ALGORITHM_IDS, RunResult, TrialSpec, run_trial

__version__ = "0.1.0"
