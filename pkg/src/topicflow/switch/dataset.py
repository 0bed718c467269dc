"""Artificial training corpus for the topic-switch detector.

Conversations are walked out of the compiled dialogue transitions. Every
(previous bot response, user message) pair is a stay turn, label 0. With
probability ``mix_rate`` the user message is swapped for a random intent
training utterance instead, and that turn gets label 1: an utterance the
dialogue never asked for is exactly what a topic switch looks like.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from topicflow.dialogue.compile import Transition
from topicflow.dialogue.graph import DialogueGraph
from topicflow.errors import ParseError, ValidationError

# Stands in for the bot response on turns where nothing was said yet.
EMPTY_RESPONSE = ""


@dataclass(frozen=True)
class SwitchExample:
    prev_response: str
    message: str
    label: int


def _previous_response(graph: DialogueGraph, path: tuple[str, ...],
                       user_pos: int, rng: np.random.Generator) -> str:
    """Text of the closest Bot node before the user node, or the sentinel."""
    for node_id in reversed(path[:user_pos]):
        node = graph.nodes[node_id]
        if node.kind == "Bot":
            if len(node.texts) > 1:
                return node.texts[int(rng.integers(len(node.texts)))]
            return node.texts[0]
    return EMPTY_RESPONSE


def generate_switch_dataset(transitions: list[Transition],
                            intent_examples: list[str],
                            mix_rate: float,
                            rng: np.random.Generator, *,
                            graphs: dict[str, DialogueGraph]) -> list[SwitchExample]:
    """Walks every transition once; deterministic for a given rng state."""
    if not transitions:
        raise ValidationError("switch corpus needs at least one transition")
    if not intent_examples:
        raise ValidationError("switch corpus needs intent utterances to mix in")
    if not 0.0 <= mix_rate <= 1.0:
        raise ValidationError(f"mix_rate must be within [0, 1], got {mix_rate}")
    examples: list[SwitchExample] = []
    for transition in transitions:
        graph = graphs.get(transition.dialogue_id)
        if graph is None:
            raise ValidationError(
                f"no dialogue graph supplied for {transition.dialogue_id!r}")
        user_positions = [i for i, node_id in enumerate(transition.path)
                          if graph.nodes[node_id].kind == "User"]
        for (utterance, _), pos in zip(transition.steps, user_positions):
            prev = _previous_response(graph, transition.path, pos, rng)
            if rng.random() < mix_rate:
                mixed = intent_examples[int(rng.integers(len(intent_examples)))]
                examples.append(SwitchExample(prev, mixed, 1))
            else:
                examples.append(SwitchExample(prev, utterance, 0))
    return examples


def save_switch_dataset(examples: list[SwitchExample], path: str | Path) -> None:
    lines = []
    for example in examples:
        for text in (example.prev_response, example.message):
            if "\t" in text or "\n" in text:
                raise ValidationError(
                    f"cannot serialize text with tab or newline: {text!r}")
        lines.append(f"{example.label}\t{example.prev_response}\t{example.message}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""),
                          encoding="utf-8")


def load_switch_dataset(path: str | Path) -> list[SwitchExample]:
    examples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[0] not in ("0", "1"):
            raise ParseError(f"line {lineno}: expected label<TAB>prev_response<TAB>message",
                             path=str(path))
        examples.append(SwitchExample(parts[1], parts[2], int(parts[0])))
    return examples
