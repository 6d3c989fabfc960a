"""Sequential and adaptive subspace estimation (SASE) for hybrid mmWave MIMO."""

from .channel import (
    ArrayGeometry,
    ChannelInstance,
    PathSet,
    assemble_channel,
    numerical_rank,
    random_channel,
    sample_paths,
    steering_vector_ula,
    steering_vector_upa,
    ula_response,
    upa_response,
)
from .errors import (
    ContractViolationError,
    EstimationError,
    IllConditionedError,
    InfeasibleError,
    InvalidParameterError,
    NumericalError,
    SaseError,
    ShapeError,
    SingularityError,
    UndefinedMetricError,
)
from .harness import ExperimentConfig, SweepResult, emit, run_sweep, run_trial
from .metrics import (
    AccuracyReport,
    budget_table,
    column_bound,
    effective_snr,
    eta,
    eta_c,
    eta_r,
    joint_bound,
    nmse,
    perfect_csi_rate,
    row_bound,
    sase_channel_uses,
    spectrum_efficiency,
)
from .reconstruct import ChannelEstimate, CoreCoefficient, build_ls_system, estimate_channel, solve_core
from .sounding import NoiseModel, basis_transmit_sounder, collect_stage_one, collect_stage_two, dft_receive_bank
from .subspace import (
    SaseResult,
    SaseSettings,
    build_dictionary,
    estimate_path_count,
    left_subspace,
    omp_hybrid_approx,
    right_subspace,
    run_sase,
)

__version__ = "0.1.0"
