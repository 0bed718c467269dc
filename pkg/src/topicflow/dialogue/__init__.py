"""Dialogue graphs: parsing, validation, compilation, and hooks."""

from topicflow.dialogue.compile import (
    START_STATE,
    ActionMaskTable,
    Transition,
    compile_transitions,
    derive_action_masks,
    response_inventory,
)
from topicflow.dialogue.graph import (
    DialogueGraph,
    DialogueNode,
    load_dialogue,
    parse_dialogue,
    serialize_dialogue,
)
from topicflow.dialogue.hooks import HookRegistry, resolve_text_actions

__all__ = [
    "ActionMaskTable",
    "DialogueGraph",
    "DialogueNode",
    "HookRegistry",
    "START_STATE",
    "Transition",
    "compile_transitions",
    "derive_action_masks",
    "load_dialogue",
    "parse_dialogue",
    "resolve_text_actions",
    "response_inventory",
    "serialize_dialogue",
]
