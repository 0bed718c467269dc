"""Benchmark loading, scoring, and hyperparameter-search drivers."""

from topicflow.evaluation.babi6 import (
    EvalDialogue,
    HpoResult,
    MetricsReport,
    build_model,
    cv_fold_accuracy,
    cv_select_epochs,
    default_search_space,
    dialogue_accuracy,
    evaluate,
    hpo_random_search,
    load_babi6,
    load_normalization_rules,
    normalize_response,
    parse_babi_file,
    response_classes,
    run_variant,
    turn_accuracy,
)

__all__ = [
    "EvalDialogue",
    "HpoResult",
    "MetricsReport",
    "build_model",
    "cv_fold_accuracy",
    "cv_select_epochs",
    "default_search_space",
    "dialogue_accuracy",
    "evaluate",
    "hpo_random_search",
    "load_babi6",
    "load_normalization_rules",
    "normalize_response",
    "parse_babi_file",
    "response_classes",
    "run_variant",
    "turn_accuracy",
]
