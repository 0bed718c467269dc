"""Hook registry: the pluggable code behind dialogue graphs.

Four hook kinds exist, mirroring the four customization points a
sub-dialogue offers:

  * can-start(dialogue_id): predicate deciding whether a sub-dialogue may be
    offered now; registered per dialogue id, with an engine-level default.
  * function(name): body of a Function node; receives the session context
    and returns the successor node id to continue with.
  * text-action(name): fills one ``{placeholder}`` inside a response text.
  * action-mask(dialogue_id): optional override replacing the derived mask
    table for one dialogue.
"""

from __future__ import annotations

import re
from collections.abc import Callable

from topicflow.errors import HookError

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class HookRegistry:
    def __init__(self):
        self._functions: dict[str, Callable] = {}
        self._text_actions: dict[str, Callable] = {}
        self._can_start: dict[str, Callable] = {}
        self._action_masks: dict[str, Callable] = {}

    def register_function(self, name: str, fn: Callable) -> None:
        self._functions[name] = fn

    def register_text_action(self, name: str, fn: Callable) -> None:
        self._text_actions[name] = fn

    def register_can_start(self, dialogue_id: str, fn: Callable) -> None:
        self._can_start[dialogue_id] = fn

    def register_action_mask(self, dialogue_id: str, fn: Callable) -> None:
        self._action_masks[dialogue_id] = fn

    def function(self, name: str) -> Callable:
        if name not in self._functions:
            raise HookError(f"function hook {name!r} is not registered")
        return self._functions[name]

    def text_action(self, name: str) -> Callable:
        if name not in self._text_actions:
            raise HookError(f"text action hook {name!r} is not registered")
        return self._text_actions[name]

    def can_start(self, dialogue_id: str) -> Callable | None:
        return self._can_start.get(dialogue_id)

    def action_mask(self, dialogue_id: str) -> Callable | None:
        return self._action_masks.get(dialogue_id)

    def has_function(self, name: str) -> bool:
        return name in self._functions

    def verify_dialogue(self, graph) -> None:
        """Checks every hook and placeholder the graph references is present."""
        missing: list[str] = []
        for node in graph.nodes.values():
            if node.kind == "Function" and node.hook not in self._functions:
                missing.append(f"function {node.hook!r} (node {node.id!r})")
            for text in node.texts:
                if node.kind != "Bot":
                    continue
                for name in _PLACEHOLDER_RE.findall(text):
                    if name not in self._text_actions:
                        missing.append(f"text action {name!r} (node {node.id!r})")
        if missing:
            raise HookError(
                f"dialogue {graph.id!r} references unregistered hooks: " + "; ".join(missing))


def resolve_text_actions(text: str, context, registry: HookRegistry) -> str:
    """Replaces each ``{name}`` left to right with its hook's output."""
    out: list[str] = []
    pos = 0
    for match in _PLACEHOLDER_RE.finditer(text):
        name = match.group(1)
        hook = registry.text_action(name)  # raises naming the placeholder
        out.append(text[pos:match.start()])
        out.append(str(hook(context)))
        pos = match.end()
    out.append(text[pos:])
    return "".join(out)
