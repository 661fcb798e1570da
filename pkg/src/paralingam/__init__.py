"""Serial and threshold-pruned parallel causal order discovery for LiNGAM models."""

from ._backend import available_backends, set_backend, use_backend
from .datagen import GeneratorConfig, GroundTruth, generate, order_violations, strength_error
from .errors import (
    CellMismatch,
    IncompleteLedger,
    LingamError,
    PerfectCorrelation,
    SingularDesign,
    ThresholdOverflow,
    ZeroVariance,
)
from .incremental import update_cov_mat, update_data
from .numerics import (
    DEFAULT_CONSTANTS,
    EntropyConstants,
    Residual,
    compare_pair,
    compute_cov_mat,
    entropy_approx,
    normalize_data,
    pairwise_measure,
    regress_residual,
)
from .parallel import (
    IterationState,
    PairLedger,
    ThresholdPolicy,
    WorkerOutcome,
    check_messages,
    para_find_root,
    run_para_lingam,
    scheduler_step,
    settle_ledger,
    worker_loop_relaxed,
)
from .serial import (
    IterationStats,
    LingamResult,
    RunStats,
    direct_lingam,
    estimate_strengths,
    find_root,
    regress_root,
)

__version__ = "0.1.0"

__all__ = [
    "CellMismatch", "DEFAULT_CONSTANTS", "EntropyConstants", "GeneratorConfig", "GroundTruth",
    "IncompleteLedger", "IterationState", "IterationStats", "LingamError", "LingamResult",
    "PairLedger", "PerfectCorrelation", "Residual", "RunStats", "SingularDesign",
    "ThresholdOverflow", "ThresholdPolicy", "WorkerOutcome", "ZeroVariance",
    "available_backends", "check_messages", "compare_pair", "compute_cov_mat",
    "direct_lingam", "entropy_approx", "estimate_strengths", "find_root", "generate",
    "normalize_data", "order_violations", "pairwise_measure", "para_find_root",
    "regress_residual", "regress_root", "run_para_lingam", "scheduler_step",
    "set_backend", "settle_ledger", "strength_error", "update_cov_mat", "update_data",
    "use_backend", "worker_loop_relaxed",
]
