"""Trainable dialogue managers: one recurrent ranker per sub-dialogue."""

from topicflow.hcn.features import (
    FrozenFeatures, TurnFeatures, TurnFeaturizer, classifier_features,
)
from topicflow.hcn.model import (
    FUNCTION_DEPTH_LIMIT, PRESET_HYPERPARAMS, DmState, HcnHyperparams, HcnModel,
    RealizedResponse, apply_action_mask, can_start, mark_started, predict_action,
    realize,
)
from topicflow.hcn.store import ModelStore, load_hcn, save_hcn
from topicflow.hcn.train import (
    best_epoch, evaluate_turn_accuracy, fit, train_hcn, transition_states,
)

__all__ = [
    "FUNCTION_DEPTH_LIMIT", "PRESET_HYPERPARAMS", "DmState", "FrozenFeatures",
    "HcnHyperparams", "HcnModel", "ModelStore", "RealizedResponse",
    "TurnFeatures", "TurnFeaturizer", "apply_action_mask", "best_epoch",
    "can_start", "classifier_features", "evaluate_turn_accuracy", "fit",
    "load_hcn", "mark_started", "predict_action", "realize", "save_hcn",
    "train_hcn", "transition_states",
]
