"""Per-sub-dialogue response manager: recurrent ranker plus action mask.

A manager owns one compiled dialogue: its response inventory, its mask
table, a turn featurizer, and a turn-level LSTM whose timesteps run across
messages rather than tokens. Prediction renormalizes the masked softmax so
prohibited classes carry exactly zero probability; realization then walks
Function hooks until a text class is reached.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from topicflow.dialogue.compile import START_STATE, ActionMaskTable
from topicflow.dialogue.graph import DialogueNode
from topicflow.context.store import STARTED_KEY
from topicflow.dialogue.hooks import HookRegistry, resolve_text_actions
from topicflow.errors import HookError, ValidationError
from topicflow.hcn.features import TurnFeatures, TurnFeaturizer
from topicflow.tensor import Dense, Dropout, LstmCell, Module
from topicflow.tensor.functional import softmax

logger = logging.getLogger(__name__)

FUNCTION_DEPTH_LIMIT = 8


@dataclass(frozen=True)
class HcnHyperparams:
    """Manager hyperparameters; defaults are the tuned CNN-input setting.

    The six presets in ``PRESET_HYPERPARAMS`` come from a hyperparameter
    search on the bAbI Task 6 validation split. All ``*_keep_prob`` values
    are keep probabilities. ``activation`` is the turn-level LSTM cell
    activation and ``input_activation`` the input LSTM's (rnn mode only).
    ``input_rnn_hidden`` has no tuned value and stays a plain default.
    """

    input_mode: str = "cnn"
    lstm_hidden: int = 245
    conv_filters: int = 21
    conv_widths: tuple[int, ...] = (1, 2, 3, 4, 5)
    input_rnn_hidden: int = 64
    lstm_keep_prob: float = 0.80
    input_rnn_keep_prob: float = 1.0
    conv_keep_prob: float = 0.72
    fc_keep_prob: float = 0.79
    learning_rate: float = 0.0001
    activation: str = "relu"
    input_activation: str = "tanh"
    adam_eps: float = 1e-8
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    max_epochs: int = 12
    folds: int = 3


PRESET_HYPERPARAMS = {
    "word2vec": HcnHyperparams(
        input_mode="plain", lstm_hidden=85, lstm_keep_prob=0.92, fc_keep_prob=0.59,
        learning_rate=0.001, activation="tanh", adam_beta1=0.5),
    "word2vec+cnn": HcnHyperparams(
        input_mode="cnn", lstm_hidden=109, conv_filters=6, lstm_keep_prob=0.79,
        conv_keep_prob=0.84, fc_keep_prob=0.93, learning_rate=0.005,
        activation="tanh", adam_eps=0.1, adam_beta1=0.5),
    "word2vec+rnn": HcnHyperparams(
        input_mode="rnn", lstm_hidden=219, lstm_keep_prob=0.74, input_rnn_keep_prob=0.91,
        fc_keep_prob=0.98, learning_rate=0.00005, activation="relu",
        input_activation="tanh", adam_beta1=0.9),
    "fasttext": HcnHyperparams(
        input_mode="plain", lstm_hidden=55, lstm_keep_prob=0.85, fc_keep_prob=0.82,
        learning_rate=0.008, activation="relu", adam_beta1=0.9),
    "fasttext+cnn": HcnHyperparams(),
    "fasttext+rnn": HcnHyperparams(
        input_mode="rnn", lstm_hidden=505, lstm_keep_prob=0.94, input_rnn_keep_prob=0.97,
        fc_keep_prob=0.76, learning_rate=0.0003, activation="relu",
        input_activation="tanh", adam_beta1=0.5),
}


@dataclass
class DmState:
    """Per-session manager state; one writer, reset on sub-dialogue entry.

    ``last_predicted`` feeds the next turn's prev-action one-hot and is the
    class the ranker chose (possibly a Function). ``last_realized`` keys the
    mask table and is the class the turn settled on after Function
    pass-through. They start apart: entering a sub-dialogue realizes its
    start response without any prediction, so the first featurized turn
    still carries an all-zero prev-action segment.
    """

    h: np.ndarray
    c: np.ndarray
    last_predicted: str | None = None
    last_realized: str = START_STATE
    finished: bool = False


@dataclass(frozen=True)
class RealizedResponse:
    """Outcome of realizing one predicted class."""

    text: str
    final_class: str
    chain: tuple[str, ...]


class HcnModel(Module):
    """Featurizer, turn-level LSTM, and class ranker for one dialogue."""

    def __init__(self, dialogue_id: str, inventory: list[tuple[str, str, str]],
                 nodes: dict[str, DialogueNode], mask_table: ActionMaskTable,
                 featurizer: TurnFeaturizer, hyper: HcnHyperparams,
                 rng: np.random.Generator):
        self.dialogue_id = dialogue_id
        self.inventory = tuple(inventory)
        self.nodes = dict(nodes)
        self.mask_table = mask_table
        self.featurizer = featurizer
        self.hyper = hyper
        self.classes = tuple(entry[0] for entry in self.inventory)
        self.class_index = {cls: i for i, cls in enumerate(self.classes)}
        in_dim = featurizer.feature_dim + len(self.classes)
        self.cell = LstmCell(in_dim, hyper.lstm_hidden, rng, act=hyper.activation)
        self.lstm_drop = Dropout(hyper.lstm_keep_prob)
        self.fc_drop = Dropout(hyper.fc_keep_prob)
        self.out = Dense(hyper.lstm_hidden, len(self.classes), rng)
        self.epochs_used = 0
        self.train_report: dict[str, Any] = {}

    def initial_state(self) -> DmState:
        h, c = self.cell.init_state()
        return DmState(h=h, c=c)

    def prev_onehot(self, class_id: str | None) -> np.ndarray:
        vec = np.zeros(len(self.classes))
        if class_id is not None:
            vec[self.class_index[class_id]] = 1.0
        return vec

    def featurize(self, utterance: str, prev_action: str | None, *,
                  training: bool = False, rng: np.random.Generator | None = None):
        return self.featurizer.featurize(utterance, self.prev_onehot(prev_action),
                                         training=training, rng=rng)

    def class_probabilities(self, features: TurnFeatures, state: DmState):
        """Unmasked softmax over the inventory plus the advanced (h, c)."""
        h, (h2, c2), _ = self.cell.step(features.vector, (state.h, state.c))
        logits, _ = self.out.forward(h)
        return softmax(logits), h2, c2

    def mark_realized(self, state: DmState, final_class: str) -> DmState:
        """Records the class a turn settled on and derives the finished flag."""
        row = self.mask_table.row(final_class)
        return replace(state, last_realized=final_class, finished=not row.any())


def apply_action_mask(probs: np.ndarray, mask_row: np.ndarray):
    """Masks and renormalizes a probability vector.

    Returns (distribution, finished). When every permitted class is masked
    out the distribution is all-zero and finished is True; softmax output
    is strictly positive, so this happens exactly when the row is all-zero.
    """
    masked = probs * mask_row
    total = masked.sum()
    if total <= 0.0:
        return np.zeros_like(probs), True
    return masked / total, False


def predict_action(model: HcnModel, state: DmState, features: TurnFeatures):
    """Ranks response classes for one turn.

    Returns (class id or None, distribution, new state). The distribution
    is the masked, renormalized softmax keyed on the last realized class;
    a None class means the mask row is exhausted and the dialogue is over.
    """
    probs, h2, c2 = model.class_probabilities(features, state)
    dist, finished = apply_action_mask(probs, model.mask_table.row(state.last_realized))
    if finished:
        return None, dist, replace(state, h=h2, c=c2, finished=True)
    chosen = model.classes[int(np.argmax(dist))]
    return chosen, dist, replace(state, h=h2, c=c2, last_predicted=chosen, finished=False)


def realize(model: HcnModel, class_id: str, context, hooks: HookRegistry,
            rng: np.random.Generator) -> RealizedResponse:
    """Turns a predicted class into text, executing Function hooks in order.

    Function classes run their hook, which returns the successor class;
    chains are capped at eight hook executions. Text variants are drawn
    uniformly (the rng is only consumed when there is a choice), then text
    actions are resolved left to right.
    """
    if class_id not in model.class_index:
        raise ValidationError(
            f"dialogue {model.dialogue_id!r} has no response class {class_id!r}")
    chain: list[str] = []
    current = class_id
    for _ in range(FUNCTION_DEPTH_LIMIT + 1):
        node = model.nodes[current]
        chain.append(current)
        if node.kind != "Function":
            text = node.texts[int(rng.integers(len(node.texts)))] if len(node.texts) > 1 else node.texts[0]
            text = resolve_text_actions(text, context, hooks)
            return RealizedResponse(text=text, final_class=current, chain=tuple(chain))
        if len(chain) > FUNCTION_DEPTH_LIMIT:
            break
        successor = hooks.function(node.hook)(context)
        if successor not in model.class_index:
            raise HookError(
                f"function hook {node.hook!r} returned {successor!r}, which is not a "
                f"response class of dialogue {model.dialogue_id!r}")
        current = successor
    raise ValidationError(
        f"dialogue {model.dialogue_id!r}: function chain from {class_id!r} exceeded "
        f"{FUNCTION_DEPTH_LIMIT} hops")


def can_start(dialogue_id: str, context, hooks: HookRegistry) -> bool:
    """Whether a sub-dialogue may start now.

    Refuses dialogues already run this session; otherwise defers to the
    registered predicate (absent predicate means yes). The predicate sees
    the context and may stash prepared data there; if it raises, the
    dialogue is treated as unavailable and the error is logged.
    """
    if dialogue_id in context.session.get(STARTED_KEY, ()):
        return False
    hook = hooks.can_start(dialogue_id)
    if hook is None:
        return True
    try:
        return bool(hook(context))
    except Exception:
        logger.warning("can-start hook for %r failed; treating as unavailable",
                       dialogue_id, exc_info=True)
        return False


def mark_started(dialogue_id: str, context) -> None:
    """Records a sub-dialogue as executed in this session."""
    started = context.session.setdefault(STARTED_KEY, [])
    if dialogue_id not in started:
        started.append(dialogue_id)
