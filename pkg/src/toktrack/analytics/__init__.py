"""Survival, conflict and revert measurements over token histories."""

from .conflict import (
    ConflictAggregate,
    ConflictScore,
    aggregate_conflict,
    conflict_scores,
    token_conflict,
    undo_weight,
)
from .reverts import (
    RevertClassification,
    RevertComparison,
    RevertSummary,
    classify_reverts,
    compare_revert_methods,
    identity_reverts,
    summarize_reverts,
)
from .survival import SurvivalBucket, classify_editor, load_bot_list, merge_buckets, survival_stats, token_fate
from .undo import IntegrityError, UndoAction, extract_undo_actions, revision_action_counts, token_undo_actions

__all__ = [
    "ConflictAggregate",
    "ConflictScore",
    "IntegrityError",
    "RevertClassification",
    "RevertComparison",
    "RevertSummary",
    "SurvivalBucket",
    "UndoAction",
    "aggregate_conflict",
    "classify_editor",
    "classify_reverts",
    "compare_revert_methods",
    "conflict_scores",
    "extract_undo_actions",
    "identity_reverts",
    "load_bot_list",
    "merge_buckets",
    "revision_action_counts",
    "summarize_reverts",
    "survival_stats",
    "token_conflict",
    "token_fate",
    "token_undo_actions",
    "undo_weight",
]
