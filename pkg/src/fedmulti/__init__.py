"""Deterministic multi-model federated averaging simulator and analysis kit.

Builds a strongly convex quadratic benchmark split across clients, trains
M models simultaneously under random-matching or round-robin client
schedules (plus the sequential single-model baseline), and analyses the
traces: error/gap metrics, multi-model gain, closed-form bound curves,
and brute-force verifiers for the inequalities behind them.
"""

from .bounds import (
    BoundCurve,
    DominationReport,
    bound_based_gain,
    contraction_check,
    empirical_vs_bound,
    frame_term_checks,
    inverse_decay_bound,
    sqrt_decay_bound,
    subset_variance_check,
)
from .engine import (
    GCalibration,
    LRSchedule,
    RunConfig,
    SampleSchedule,
    TrainingSession,
    TrainingTrace,
    calibrate_g_bound,
    local_update,
    lr_scaled_sample_size,
    run_training,
    server_round,
)
from .config import (
    ConfigError,
    ExperimentSpec,
    ProblemSpec,
    dump_config,
    load_config,
    parse_config,
)
from .metrics import (
    GainReport,
    SeedStats,
    compute_gain,
    error_delta,
    gain_from_rounds,
    gap,
    multi_model_rounds_to_accuracy,
    rounds_to_accuracy,
    seed_statistics,
)
from .presets import PRESETS, get_preset
from .sweeps import (
    CrossingResult,
    crossing_search,
    run_seed_sweep,
    single_model_baseline,
    stack_delta,
    stack_gap,
)
from .problem import (
    ProblemConstants,
    QuadraticClient,
    QuadraticProblem,
    build_quadratic_problem,
    compute_constants,
    lambda_max,
    solve_minimizer,
)
from .scheduling import (
    Assignment,
    FrameCache,
    Partition,
    frame_index,
    full_participation_assign,
    make_scheduler,
    partition_clients,
    random_matching_assign,
    round_robin_assign,
)
from .streams import substream

__version__ = "0.1.0"
