"""Correlation-graph data augmentation for multi-lead waveforms.

The toolkit estimates a lead graph (dataset-average lag-0 Pearson
correlations between leads), uses it to mix correlated leads into each
other as an augmentation, composes that with four standard signal
augmentations under seeded policies, and ships a small adversarial
robustness harness (linear classifier, ℓ∞ PGD, macro-F1 curves) to
measure what the augmentation buys.

Everything is deterministic: one integer seed plus labeled substream
forks pin every random draw, byte for byte.
"""

from .attack import AttackConfig, pgd_attack, pgd_attack_batch, robustness_curve
from .classifier import DivergenceError, WaveformLinearClassifier
from .container import (
    ContainerError,
    load_container,
    load_labels,
    read_container,
    read_csv_record,
    save_container,
    save_labels,
    write_container,
    write_csv_record,
)
from .estimators import LeadGraphEstimator, PolicyAugmenter
from .experiments import HarnessConfig, PolicyCurve, compare_policies, policy_robustness
from .graph import (
    CorrelationAccumulator,
    EmptyAccumulatorError,
    LeadGraph,
    LeadMismatchError,
    estimate_graph,
    record_correlation,
)
from .metrics import F1Report, f1_report, macro_f1
from .ops import (
    STANDARD_OPS,
    GraphAugParams,
    gaussian_noise,
    gaussian_smooth,
    graph_augment,
    graph_mix,
    time_warp,
    zero_mask,
)
from .policy import AugmentPolicy, apply_policy, augment_records, augment_training_set, sample_plan
from .randomness import RandomStream
from .records import (
    CANONICAL_12_LEAD_ORDER,
    LeadStats,
    MultiLeadRecord,
    as_batch_array,
    canonical_lead_order,
    lead_stats,
    require_valid,
    validate_record,
)
from .search import (
    CellScore,
    LinearScorer,
    ScoreReport,
    SearchCell,
    SearchGrid,
    SubprocessScorer,
    policy_search,
)
from .synth import SynthSpec, default_directions, synth_dataset

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AugmentPolicy",
    "CANONICAL_12_LEAD_ORDER",
    "CellScore",
    "ContainerError",
    "CorrelationAccumulator",
    "DivergenceError",
    "EmptyAccumulatorError",
    "F1Report",
    "GraphAugParams",
    "HarnessConfig",
    "LeadGraph",
    "LeadGraphEstimator",
    "LeadMismatchError",
    "LeadStats",
    "LinearScorer",
    "MultiLeadRecord",
    "PolicyAugmenter",
    "PolicyCurve",
    "RandomStream",
    "STANDARD_OPS",
    "ScoreReport",
    "SearchCell",
    "SearchGrid",
    "SubprocessScorer",
    "SynthSpec",
    "WaveformLinearClassifier",
    "apply_policy",
    "as_batch_array",
    "augment_records",
    "augment_training_set",
    "canonical_lead_order",
    "compare_policies",
    "default_directions",
    "estimate_graph",
    "f1_report",
    "gaussian_noise",
    "gaussian_smooth",
    "graph_augment",
    "graph_mix",
    "lead_stats",
    "load_container",
    "load_labels",
    "macro_f1",
    "pgd_attack",
    "pgd_attack_batch",
    "policy_robustness",
    "policy_search",
    "read_container",
    "read_csv_record",
    "record_correlation",
    "require_valid",
    "robustness_curve",
    "sample_plan",
    "save_container",
    "save_labels",
    "synth_dataset",
    "time_warp",
    "validate_record",
    "write_container",
    "write_csv_record",
    "zero_mask",
]
