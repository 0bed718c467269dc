"""Restaurant-reservation benchmark: loading, training, and scoring.

The corpus ships as three text files (train/valid/test) of numbered
dialogues. A turn line is "n user<TAB>bot"; a line without a tab is a
database fact echoed into the transcript and carries no response to
predict, so the loader keeps only the turns. Bot responses mention
concrete venues, phone numbers, and addresses; a data-driven rule file
(normalization_rules.tsv) collapses those into placeholders so responses
that differ only in slot values form one class.

There is no authored dialogue graph here, so the manager trains with an
all-permitted action mask: every class is legal after every other. The
benchmark driver trains on the official training split for the preset's
epoch budget, reports validation accuracy per epoch, and scores the test
split once at the end; validation and test numbers are both reported and
intentionally not reconciled.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from topicflow.dialogue.compile import START_STATE, ActionMaskTable, Transition
from topicflow.dialogue.graph import DialogueNode
from topicflow.errors import ConfigurationError, ParseError, ValidationError
from topicflow.hcn.features import TurnFeaturizer
from topicflow.hcn.model import HcnHyperparams, HcnModel, PRESET_HYPERPARAMS
from topicflow.hcn.store import save_hcn
from topicflow.hcn.train import best_epoch, fit
from topicflow.nlu.tokenize import tokenize
from topicflow.tensor import EmbeddingTable, Vocabulary
from topicflow.tensor.functional import softmax
from topicflow.tensor.vocab import load_embeddings, write_embeddings

RULES_FILE = Path(__file__).with_name("normalization_rules.tsv")

SPLIT_FILES = {
    "train": "dialog-babi-task6-dstc2-trn.txt",
    "valid": "dialog-babi-task6-dstc2-dev.txt",
    "test": "dialog-babi-task6-dstc2-tst.txt",
}

_NUMBERED = re.compile(r"^(\d+) (.*)$", re.DOTALL)


@dataclass(frozen=True)
class EvalDialogue:
    """One dialogue: (user message, gold response class) turns plus the
    raw bot texts the classes were normalized from."""

    turns: tuple[tuple[str, str], ...]
    raw: tuple[str, ...]

    def __post_init__(self):
        if not self.turns:
            raise ValidationError("a dialogue needs at least one turn")
        if len(self.turns) != len(self.raw):
            raise ValidationError("turns and raw responses must align")


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy pair plus per-class confusion counts for one split."""

    turn_accuracy: float
    dialogue_accuracy: float
    confusion: dict
    fingerprint: str

    def __post_init__(self):
        if self.dialogue_accuracy > self.turn_accuracy + 1e-12:
            raise ValidationError(
                "dialogue accuracy cannot exceed turn accuracy")


# ----------------------------------------------------------------------
# loading and normalization

def load_normalization_rules(path: str | Path | None = None):
    """Reads the pattern/replacement table; order is significant."""
    path = Path(path) if path is not None else RULES_FILE
    rules = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("rule line needs <pattern><TAB><replacement>",
                             path=str(path), line=lineno)
        try:
            pattern = re.compile(parts[0])
        except re.error as exc:
            raise ParseError(f"bad pattern: {exc}", path=str(path),
                             line=lineno) from exc
        rules.append((pattern, parts[1]))
    if not rules:
        raise ParseError("rule file defines no rules", path=str(path))
    return tuple(rules)


def normalize_response(text: str, rules) -> str:
    """Lowercases, applies the rule table in order, collapses whitespace."""
    out = text.strip().lower()
    for pattern, replacement in rules:
        out = pattern.sub(replacement, out)
    return " ".join(out.split())


def parse_babi_file(path: str | Path) -> list[list[tuple[str, str]]]:
    """Raw (user, bot) turn pairs per dialogue, database facts skipped."""
    path = Path(path)
    dialogues: list[list[tuple[str, str]]] = []
    current: list[tuple[str, str]] = []
    saw_content = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                if saw_content and not current:
                    raise ParseError("dialogue block contains no turns",
                                     path=str(path), line=lineno)
                if current:
                    dialogues.append(current)
                current = []
                saw_content = False
                continue
            match = _NUMBERED.match(line)
            if match is None:
                raise ParseError("expected 'n user<TAB>bot' or 'n fact'",
                                 path=str(path), line=lineno)
            rest = match.group(2)
            saw_content = True
            if "\t" not in rest:
                continue  # database fact line
            user, _, bot = rest.partition("\t")
            if not user.strip() or not bot.strip():
                raise ParseError("turn line with an empty side",
                                 path=str(path), line=lineno)
            current.append((user.strip(), bot.strip()))
    if saw_content and not current:
        raise ParseError("dialogue block contains no turns", path=str(path))
    if current:
        dialogues.append(current)
    return dialogues


def _normalized(pairs: list[list[tuple[str, str]]], rules) -> list[EvalDialogue]:
    out = []
    for dialogue in pairs:
        turns = tuple((user, normalize_response(bot, rules))
                      for user, bot in dialogue)
        out.append(EvalDialogue(turns=turns,
                                raw=tuple(bot for _, bot in dialogue)))
    return out


def load_babi6(path: str | Path, *, rules_path: str | Path | None = None):
    """Loads the three splits from a directory of the standard files.

    Returns (train, valid, test) as lists of EvalDialogue with responses
    already normalized into classes.
    """
    root = Path(path)
    if not root.is_dir():
        raise ConfigurationError(f"benchmark directory not found: {root}")
    rules = load_normalization_rules(rules_path)
    splits = []
    for split in ("train", "valid", "test"):
        file = root / SPLIT_FILES[split]
        if not file.is_file():
            raise ConfigurationError(
                f"missing {split} file: {file} "
                f"(expected the standard task-6 file names)")
        splits.append(_normalized(parse_babi_file(file), rules))
    return tuple(splits)


def response_classes(*sets: list[EvalDialogue]) -> list[str]:
    """Sorted distinct response classes across the given dialogue sets."""
    return sorted({cls for dialogues in sets
                   for d in dialogues for _, cls in d.turns})


# ----------------------------------------------------------------------
# metrics

def _check_aligned(preds, golds) -> None:
    if len(preds) != len(golds):
        raise ValidationError(
            f"got {len(preds)} predicted dialogues for {len(golds)} gold ones")
    for i, (p, g) in enumerate(zip(preds, golds)):
        if len(p) != len(g):
            raise ValidationError(
                f"dialogue {i}: {len(p)} predictions for {len(g)} turns")


def turn_accuracy(preds, golds) -> float:
    """Correct turns over all turns; both arguments nest per dialogue."""
    _check_aligned(preds, golds)
    total = sum(len(g) for g in golds)
    if total == 0:
        return 0.0
    correct = sum(p == g for ps, gs in zip(preds, golds)
                  for p, g in zip(ps, gs))
    return correct / total


def dialogue_accuracy(preds, golds) -> float:
    """Dialogues predicted perfectly over all dialogues."""
    _check_aligned(preds, golds)
    if not golds:
        return 0.0
    perfect = sum(list(p) == list(g) for p, g in zip(preds, golds))
    return perfect / len(golds)


def _predict(model: HcnModel, dialogue: EvalDialogue) -> list[str]:
    """Teacher-forced class predictions; every class is permitted."""
    h, c = model.cell.init_state()
    prev: str | None = None
    preds = []
    for text, gold in dialogue.turns:
        feats, _ = model.featurize(text, prev)
        _, (h, c), _ = model.cell.step(feats.vector, (h, c))
        logits, _ = model.out.forward(h)
        preds.append(model.classes[int(np.argmax(softmax(logits)))])
        prev = gold
    return preds


def evaluate(model: HcnModel, dialogues: list[EvalDialogue],
             fingerprint: str = "") -> MetricsReport:
    """Scores a split and tallies gold-class by predicted-class counts."""
    preds = [_predict(model, d) for d in dialogues]
    golds = [[cls for _, cls in d.turns] for d in dialogues]
    confusion: dict[str, dict[str, int]] = {}
    for ps, gs in zip(preds, golds):
        for p, g in zip(ps, gs):
            row = confusion.setdefault(g, {})
            row[p] = row.get(p, 0) + 1
    return MetricsReport(
        turn_accuracy=turn_accuracy(preds, golds),
        dialogue_accuracy=dialogue_accuracy(preds, golds),
        confusion=confusion,
        fingerprint=fingerprint,
    )


# ----------------------------------------------------------------------
# model assembly

def _allow_all_masks(classes: tuple[str, ...]) -> ActionMaskTable:
    ones = np.ones(len(classes))
    rows = {state: ones.copy() for state in (START_STATE, *classes)}
    return ActionMaskTable(classes=classes, rows=rows)


def build_model(classes: list[str], examples: dict[str, str],
                hyper: HcnHyperparams, table: EmbeddingTable,
                rng: np.random.Generator,
                bow_vocab: Vocabulary | None = None) -> HcnModel:
    """A manager over a flat class inventory with an all-permitted mask.

    ``examples`` maps each class to one raw response text so the saved
    model can still realize something readable.
    """
    inventory = [(cls, cls, "Bot") for cls in classes]
    nodes = {cls: DialogueNode(id=cls, kind="Bot",
                               texts=(examples.get(cls, cls),))
             for cls in classes}
    featurizer = TurnFeaturizer(
        hyper.input_mode, table, rng,
        conv_widths=hyper.conv_widths, conv_filters=hyper.conv_filters,
        conv_keep_prob=hyper.conv_keep_prob,
        input_rnn_hidden=hyper.input_rnn_hidden,
        input_rnn_keep_prob=hyper.input_rnn_keep_prob,
        input_activation=hyper.input_activation,
        bow_vocab=bow_vocab, sentiment=None, acts=None)
    return HcnModel("babi6", inventory, nodes, _allow_all_masks(tuple(classes)),
                    featurizer, hyper, rng)


def _transitions(dialogues: list[EvalDialogue]) -> list[Transition]:
    return [Transition(dialogue_id="babi6", steps=tuple(d.turns), path=())
            for d in dialogues]


def _turn_accuracy_on(model: HcnModel, dialogues: list[EvalDialogue]) -> float:
    preds = [_predict(model, d) for d in dialogues]
    golds = [[cls for _, cls in d.turns] for d in dialogues]
    return turn_accuracy(preds, golds)


# ----------------------------------------------------------------------
# cross-validated epoch selection

def cv_fold_accuracy(dialogues: list[EvalDialogue], hyper: HcnHyperparams, *,
                     table: EmbeddingTable, folds: int = 3,
                     max_epochs: int = 12, seed: int = 0,
                     log=None) -> np.ndarray:
    """(folds, max_epochs) validation turn accuracies.

    Folds split by whole dialogues: the shuffled list is dealt round-robin
    so every fold sees the same mix of lengths.
    """
    if len(dialogues) < folds:
        raise ValidationError(
            f"need at least {folds} dialogues for {folds}-fold "
            f"cross-validation, got {len(dialogues)}")
    seeds = np.random.SeedSequence(seed).spawn(folds + 1)
    order = np.random.default_rng(seeds[0]).permutation(len(dialogues))
    shuffled = [dialogues[i] for i in order]
    classes = response_classes(dialogues)
    examples = {cls: cls for cls in classes}
    accuracy = np.zeros((folds, max_epochs))
    for k in range(folds):
        held = set(range(k, len(shuffled), folds))
        fold_train = [d for i, d in enumerate(shuffled) if i not in held]
        fold_val = [d for i, d in enumerate(shuffled) if i in held]
        rng = np.random.default_rng(seeds[1 + k])
        bow = None
        if hyper.input_mode == "plain":
            bow = Vocabulary.from_corpus(
                tokenize(text) for d in fold_train for text, _ in d.turns)
        model = build_model(classes, examples, hyper, table, rng, bow)
        train = _transitions(fold_train)
        for epoch in range(max_epochs):
            fit(model, train, 1, rng)
            accuracy[k, epoch] = _turn_accuracy_on(model, fold_val)
            if log is not None:
                log(f"fold {k + 1}/{folds}  epoch {epoch + 1:>2}/{max_epochs}"
                    f"  val turn acc {accuracy[k, epoch]:.4f}")
    return accuracy


def cv_select_epochs(dialogues: list[EvalDialogue], hyper: HcnHyperparams, *,
                     table: EmbeddingTable, folds: int = 3,
                     max_epochs: int = 12, seed: int = 0, log=None) -> int:
    """Epoch count with the best mean fold accuracy; ties pick the earliest."""
    accuracy = cv_fold_accuracy(dialogues, hyper, table=table, folds=folds,
                                max_epochs=max_epochs, seed=seed, log=log)
    return best_epoch(accuracy.mean(axis=0))


# ----------------------------------------------------------------------
# random-search hyperparameter driver

def default_search_space() -> dict:
    """Ranges for the tunable manager hyperparameters."""
    return {
        "lstm_hidden": (32, 512, "int"),
        "conv_filters": (4, 32, "int"),
        "lstm_keep_prob": (0.5, 1.0),
        "conv_keep_prob": (0.5, 1.0),
        "fc_keep_prob": (0.5, 1.0),
        "input_rnn_keep_prob": (0.5, 1.0),
        "learning_rate": (1e-5, 1e-2, "log"),
        "activation": ["tanh", "relu"],
        "input_activation": ["tanh", "relu"],
        "adam_eps": [1e-8, 1e-4, 0.1],
        "adam_beta1": [0.5, 0.9],
    }


def _sample(space: dict, rng: np.random.Generator) -> dict:
    config = {}
    for name in sorted(space):
        spec = space[name]
        if isinstance(spec, list):
            config[name] = spec[int(rng.integers(len(spec)))]
        elif isinstance(spec, tuple) and len(spec) == 2:
            low, high = spec
            config[name] = float(rng.uniform(low, high))
        elif isinstance(spec, tuple) and len(spec) == 3 and spec[2] == "int":
            config[name] = int(rng.integers(spec[0], spec[1] + 1))
        elif isinstance(spec, tuple) and len(spec) == 3 and spec[2] == "log":
            config[name] = float(np.exp(rng.uniform(np.log(spec[0]),
                                                    np.log(spec[1]))))
        else:
            raise ConfigurationError(
                f"search space entry {name!r} must be a list of choices, "
                f"(low, high), (low, high, 'int'), or (low, high, 'log')")
    return config


@dataclass(frozen=True)
class HpoResult:
    best_config: dict
    best_score: float
    trials: tuple[dict, ...]


def hpo_random_search(space: dict, budget: int, seed: int, *,
                      objective, log=None) -> HpoResult:
    """Draws ``budget`` configurations and keeps the best-scoring one.

    Each trial's draw is seeded from (seed, trial index), so the sampled
    sequence never depends on evaluation order and two runs with the same
    seed propose identical configurations. ``objective`` maps a config
    dict to a score where higher is better; the full trial log comes back
    ordered by trial index, one record per trial.
    """
    if budget < 1:
        raise ValidationError(f"search budget must be positive, got {budget}")
    if not space:
        raise ValidationError("search space is empty")
    trials = []
    for index in range(budget):
        rng = np.random.default_rng(np.random.SeedSequence((seed, index)))
        config = _sample(space, rng)
        score = float(objective(config))
        trials.append({"trial": index, "config": config, "score": score})
        if log is not None:
            rendered = " ".join(f"{k}={v:.5g}" if isinstance(v, float)
                                else f"{k}={v}" for k, v in config.items())
            log(f"trial {index + 1:>3}/{budget}  score {score:8.4f}  {rendered}")
    best = max(trials, key=lambda t: t["score"])
    return HpoResult(best_config=dict(best["config"]),
                     best_score=best["score"], trials=tuple(trials))


# ----------------------------------------------------------------------
# benchmark driver

def _fingerprint(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _aligned_results(report: dict) -> str:
    lines = [
        f"{'variant':<18}{report['variant']}",
        f"{'embeddings':<18}{report['embeddings'] or 'random (seeded)'}",
        f"{'seed':<18}{report['seed']}",
        f"{'classes':<18}{report['classes']}",
        f"{'train dialogues':<18}{report['counts']['train']}",
        f"{'valid dialogues':<18}{report['counts']['valid']}",
        f"{'test dialogues':<18}{report['counts']['test']}",
        f"{'epochs':<18}{report['epochs']}",
        f"{'fingerprint':<18}{report['fingerprint']}",
        "",
        f"{'epoch':>5}  {'val turn acc':>12}",
    ]
    for i, acc in enumerate(report["val_curve"], start=1):
        lines.append(f"{i:>5}  {acc:>12.4f}")
    lines.extend([
        "",
        f"{'split':<7}{'turn acc':>10}{'dialogue acc':>14}",
        f"{'valid':<7}{report['val_turn_accuracy']:>10.4f}"
        f"{report['val_dialogue_accuracy']:>14.4f}",
        f"{'test':<7}{report['test_turn_accuracy']:>10.4f}"
        f"{report['test_dialogue_accuracy']:>14.4f}",
    ])
    return "\n".join(lines) + "\n"


def run_variant(data: str | Path, *, variant: str = "fasttext+cnn",
                embeddings: str | Path | None = None,
                out: str | Path | None = None, seed: int = 0,
                embed_dim: int = 50, epochs: int | None = None,
                hyper: HcnHyperparams | None = None, log=None) -> dict:
    """Trains one preset on the benchmark and reports both split scores.

    With no embedding file the word vectors are a seeded random table of
    ``embed_dim`` dimensions over the corpus vocabulary (fine for smoke
    runs, far below pretrained vectors). Training runs the preset's full
    epoch budget; validation accuracy is recorded after every epoch.
    ``hyper`` swaps in custom hyperparameters (for search results or small
    probe corpora) while the variant keeps naming the reported input mode.
    """
    started = time.monotonic()
    if variant not in PRESET_HYPERPARAMS:
        known = ", ".join(sorted(PRESET_HYPERPARAMS))
        raise ConfigurationError(f"unknown variant {variant!r}; one of: {known}")
    if hyper is None:
        hyper = PRESET_HYPERPARAMS[variant]
    if epochs is not None:
        hyper = dataclasses.replace(hyper, max_epochs=epochs)
    train_set, valid_set, test_set = load_babi6(data)

    seeds = np.random.SeedSequence(seed).spawn(2)
    if embeddings is not None:
        table = load_embeddings(str(embeddings))
    else:
        vocab = Vocabulary.from_corpus(
            tokenize(text) for split in (train_set, valid_set, test_set)
            for d in split for text, _ in d.turns)
        table = EmbeddingTable.random(vocab, embed_dim,
                                      np.random.default_rng(seeds[0]))

    classes = response_classes(train_set, valid_set, test_set)
    examples: dict[str, str] = {}
    for d in train_set:
        for (_, cls), raw in zip(d.turns, d.raw):
            examples.setdefault(cls, raw)
    bow = None
    if hyper.input_mode == "plain":
        bow = Vocabulary.from_corpus(
            tokenize(text) for d in train_set for text, _ in d.turns)

    rng = np.random.default_rng(seeds[1])
    model = build_model(classes, examples, hyper, table, rng, bow)
    train = _transitions(train_set)

    if log is not None:
        log(f"variant {variant}: {len(train)} training dialogues, "
            f"{len(classes)} classes, {hyper.max_epochs} epochs")
    val_curve = []
    for epoch in range(hyper.max_epochs):
        curve = fit(model, train, 1, rng)
        val_curve.append(_turn_accuracy_on(model, valid_set))
        if log is not None:
            log(f"epoch {epoch + 1:>2}/{hyper.max_epochs}  "
                f"loss {curve[-1]:8.4f}  val turn acc {val_curve[-1]:.4f}")
    model.epochs_used = hyper.max_epochs

    counts = {"train": len(train_set), "valid": len(valid_set),
              "test": len(test_set)}
    fingerprint = _fingerprint({
        "variant": variant, "seed": seed,
        "hyper": dataclasses.asdict(hyper),
        "embeddings": str(embeddings) if embeddings else f"random-{embed_dim}",
        "counts": counts, "classes": len(classes),
    })
    val_report = evaluate(model, valid_set, fingerprint)
    test_report = evaluate(model, test_set, fingerprint)

    report = {
        "variant": variant,
        "seed": seed,
        "embeddings": str(embeddings) if embeddings else None,
        "counts": counts,
        "classes": len(classes),
        "epochs": hyper.max_epochs,
        "val_curve": val_curve,
        "val_turn_accuracy": val_report.turn_accuracy,
        "val_dialogue_accuracy": val_report.dialogue_accuracy,
        "test_turn_accuracy": test_report.turn_accuracy,
        "test_dialogue_accuracy": test_report.dialogue_accuracy,
        "fingerprint": fingerprint,
        "seconds": round(time.monotonic() - started, 3),
    }
    if log is not None:
        log(_aligned_results(report))
    if out is not None:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        model.train_report = {k: v for k, v in report.items()
                              if k != "val_curve"}
        save_hcn(model, out_dir)
        write_embeddings(table, out_dir / "embeddings.txt")
        (out_dir / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
        (out_dir / "results.txt").write_text(_aligned_results(report))
    return report
