"""Training loop for the per-dialogue response managers.

Examples are whole transitions. The split is 80/10/10 by transition, the
epoch count (1..12) is picked by three-fold cross-validation on the
training portion, and the final model retrains on that whole portion for
the chosen count. The loss is per-turn cross-entropy on the unmasked
softmax, backpropagated through the turn-level LSTM across the whole
transition; the mask only gates prediction.
"""

from __future__ import annotations

import time

import numpy as np

from topicflow.dialogue.compile import (
    Transition, derive_action_masks, replay_states, response_inventory,
)
from topicflow.dialogue.graph import DialogueGraph
from topicflow.errors import ValidationError
from topicflow.hcn.features import FrozenFeatures, TurnFeaturizer
from topicflow.hcn.model import HcnHyperparams, HcnModel, apply_action_mask
from topicflow.nlu.tokenize import tokenize
from topicflow.tensor import Adam, EmbeddingTable, Vocabulary
from topicflow.tensor.functional import softmax, softmax_cross_entropy


def best_epoch(mean_accuracy: np.ndarray) -> int:
    """1-based epoch with the best mean fold accuracy; ties pick the earliest."""
    return int(np.argmax(mean_accuracy)) + 1


def transition_loss(model: HcnModel, transition: Transition,
                    rng: np.random.Generator) -> float:
    """One teacher-forced pass with backpropagation through the turns."""
    state = model.cell.init_state()
    prev: str | None = None
    per_step = []
    total = 0.0
    for text, gold in transition.steps:
        feats, fcache = model.featurize(text, prev, training=True, rng=rng)
        x = feats.vector
        h, state, cell_cache = model.cell.step(x, state)
        h1, m1 = model.lstm_drop.forward(h, rng, True)
        h2, m2 = model.fc_drop.forward(h1, rng, True)
        logits, out_cache = model.out.forward(h2)
        loss, dlogits = softmax_cross_entropy(logits, model.class_index[gold])
        total += loss
        per_step.append((fcache, cell_cache, m1, m2, out_cache, dlogits))
        prev = gold
    dstate = None
    for fcache, cell_cache, m1, m2, out_cache, dlogits in reversed(per_step):
        dh2 = model.out.backward(dlogits, out_cache)
        dh1 = model.fc_drop.backward(dh2, m2)
        dh = model.lstm_drop.backward(dh1, m1)
        dx, dstate = model.cell.step_backward(dh, dstate, cell_cache)
        model.featurizer.backward(dx[:model.featurizer.feature_dim], fcache)
    return total


def fit(model: HcnModel, transitions: list[Transition], epochs: int,
        rng: np.random.Generator) -> list[float]:
    """Trains in place; returns the mean per-turn loss after each epoch."""
    optimizer = Adam(model.parameters(), lr=model.hyper.learning_rate,
                     beta1=model.hyper.adam_beta1, beta2=model.hyper.adam_beta2,
                     eps=model.hyper.adam_eps)
    curve = []
    for _ in range(epochs):
        order = rng.permutation(len(transitions))
        loss_sum = 0.0
        turns = 0
        for i in order:
            transition = transitions[i]
            if not transition.steps:
                continue
            optimizer.zero_grad()
            loss_sum += transition_loss(model, transition, rng)
            turns += len(transition.steps)
            optimizer.step()
        curve.append(loss_sum / turns if turns else 0.0)
    return curve


def evaluate_turn_accuracy(model: HcnModel, transitions: list[Transition],
                           states: list[list[tuple[str, str]]]) -> float:
    """Teacher-forced masked accuracy; ``states`` aligns with transitions."""
    correct = 0
    total = 0
    for transition, replay in zip(transitions, states):
        h, c = model.cell.init_state()
        prev: str | None = None
        for (text, _), (mask_state, gold) in zip(transition.steps, replay):
            feats, _ = model.featurize(text, prev)
            x = feats.vector
            _, (h, c), _ = model.cell.step(x, (h, c))
            logits, _ = model.out.forward(h)
            dist, finished = apply_action_mask(softmax(logits), model.mask_table.row(mask_state))
            total += 1
            if not finished and model.classes[int(np.argmax(dist))] == gold:
                correct += 1
            prev = gold
    return correct / total if total else 0.0


def transition_states(transitions: list[Transition],
                      graph: DialogueGraph) -> list[list[tuple[str, str]]]:
    return [replay_states(t, graph) for t in transitions]


def _fold_slices(count: int, folds: int) -> list[np.ndarray]:
    return [np.arange(count)[k::folds] for k in range(folds)]


def train_hcn(transitions: list[Transition], hyper: HcnHyperparams, seed: int = 0, *,
              graph: DialogueGraph, table: EmbeddingTable,
              sentiment: FrozenFeatures | None = None,
              acts: FrozenFeatures | None = None) -> HcnModel:
    """Trains one dialogue's manager from its compiled transitions.

    ``table`` is the frozen word-vector table the input featurizer reads;
    ``sentiment`` and ``acts`` are optional frozen feature providers.
    Raises when there are fewer transitions than cross-validation folds.
    """
    transitions = list(transitions)
    if len(transitions) < hyper.folds:
        raise ValidationError(
            f"dialogue {graph.id!r}: need at least {hyper.folds} transitions for "
            f"{hyper.folds}-fold cross-validation, got {len(transitions)}")
    started = time.monotonic()
    seeds = np.random.SeedSequence(seed).spawn(hyper.folds + 2)
    split_rng = np.random.default_rng(seeds[0])

    order = split_rng.permutation(len(transitions))
    n_dev = len(transitions) // 10
    n_test = len(transitions) // 10
    dev = [transitions[i] for i in order[:n_dev]]
    test = [transitions[i] for i in order[n_dev:n_dev + n_test]]
    train = [transitions[i] for i in order[n_dev + n_test:]]

    inventory = response_inventory(graph)
    mask_table = derive_action_masks(graph)
    nodes = {cls: graph.nodes[node_id] for cls, node_id, _ in inventory}
    bow_vocab = None
    if hyper.input_mode == "plain":
        bow_vocab = Vocabulary.from_corpus(
            tokenize(text) for t in train for text, _ in t.steps)

    def build(rng: np.random.Generator) -> HcnModel:
        featurizer = TurnFeaturizer(
            hyper.input_mode, table, rng,
            conv_widths=hyper.conv_widths, conv_filters=hyper.conv_filters,
            conv_keep_prob=hyper.conv_keep_prob, input_rnn_hidden=hyper.input_rnn_hidden,
            input_rnn_keep_prob=hyper.input_rnn_keep_prob,
            input_activation=hyper.input_activation,
            bow_vocab=bow_vocab, sentiment=sentiment, acts=acts)
        return HcnModel(graph.id, inventory, nodes, mask_table, featurizer, hyper, rng)

    fold_accuracy = np.zeros((hyper.folds, hyper.max_epochs))
    for k, held in enumerate(_fold_slices(len(train), hyper.folds)):
        held_set = set(held.tolist())
        fold_train = [t for i, t in enumerate(train) if i not in held_set]
        fold_val = [t for i, t in enumerate(train) if i in held_set]
        val_states = transition_states(fold_val, graph)
        rng = np.random.default_rng(seeds[1 + k])
        model = build(rng)
        for epoch in range(hyper.max_epochs):
            fit(model, fold_train, 1, rng)
            fold_accuracy[k, epoch] = evaluate_turn_accuracy(model, fold_val, val_states)
    mean_accuracy = fold_accuracy.mean(axis=0)
    epochs = best_epoch(mean_accuracy)

    final_rng = np.random.default_rng(seeds[-1])
    model = build(final_rng)
    curve = fit(model, train, epochs, final_rng)
    model.epochs_used = epochs
    model.train_report = {
        "transitions": {"train": len(train), "dev": len(dev), "test": len(test)},
        "cv_accuracy": mean_accuracy.tolist(),
        "loss_curve": curve,
        "train_accuracy": evaluate_turn_accuracy(model, train, transition_states(train, graph)),
        "dev_accuracy": evaluate_turn_accuracy(model, dev, transition_states(dev, graph)),
        "test_accuracy": evaluate_turn_accuracy(model, test, transition_states(test, graph)),
        "seconds": round(time.monotonic() - started, 3),
    }
    return model
