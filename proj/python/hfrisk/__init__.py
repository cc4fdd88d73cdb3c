"""Heart-failure risk scoring: simulator, MLP, metrics, rules and triage."""

from ._hfrisk import (
    FEATURE_SCHEMA_VERSION,
    Model,
    NotFoundError,
    RuleSet,
    ValidationError,
    auc_pr,
    auc_roc,
    build_worklist,
    feature_names,
    impute_series,
    load_samples,
    pr_curve,
    roc_curve,
    simulate,
    train,
)

__all__ = [
    "FEATURE_SCHEMA_VERSION",
    "Model",
    "NotFoundError",
    "RuleSet",
    "ValidationError",
    "auc_pr",
    "auc_roc",
    "build_worklist",
    "feature_names",
    "impute_series",
    "load_samples",
    "pr_curve",
    "roc_curve",
    "simulate",
    "train",
]
