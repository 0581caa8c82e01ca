"""Radio-map cleansing and k-NN positioning evaluation for Wi-Fi RSS
fingerprinting datasets."""

from .cleanse import (
    ApRankMatrix,
    CleanseConfig,
    CleanseReport,
    MatchVector,
    best_match_vector,
    clean,
    compute_match_vector,
    compute_window,
    match_percentage,
    rank_aps,
)
from .metrics import (
    EvaluationReport,
    NormalizedMetrics,
    RunMetrics,
    ecdf,
    evaluate,
    evaluate_full,
    fraction_below,
    normalize,
    rss_histogram,
)
from .positioning import BatchEstimates, KnnConfig, PositionEstimate, Positioner, fit
from .radiomap import (
    ColumnSchema,
    Fingerprint,
    LoadProfile,
    MapMeta,
    PositiveMap,
    RadioMap,
    ensure_z,
    load_csv,
    load_profile,
    save_csv,
    to_positive,
    valid_counts,
)
from .sweep import SweepResult, ThresholdRecord, split_train_validation, sweep
from .synth import SynthConfig, generate, generate_queries, oracle_clean, path_loss_rss

__version__ = "0.1.0"

__all__ = [
    "ApRankMatrix",
    "BatchEstimates",
    "CleanseConfig",
    "CleanseReport",
    "ColumnSchema",
    "EvaluationReport",
    "Fingerprint",
    "KnnConfig",
    "LoadProfile",
    "MapMeta",
    "MatchVector",
    "NormalizedMetrics",
    "PositionEstimate",
    "Positioner",
    "PositiveMap",
    "RadioMap",
    "RunMetrics",
    "SweepResult",
    "SynthConfig",
    "ThresholdRecord",
    "best_match_vector",
    "clean",
    "compute_match_vector",
    "compute_window",
    "ecdf",
    "ensure_z",
    "evaluate",
    "evaluate_full",
    "fit",
    "fraction_below",
    "generate",
    "generate_queries",
    "load_csv",
    "load_profile",
    "match_percentage",
    "normalize",
    "oracle_clean",
    "path_loss_rss",
    "rank_aps",
    "rss_histogram",
    "save_csv",
    "split_train_validation",
    "sweep",
    "to_positive",
    "valid_counts",
]
