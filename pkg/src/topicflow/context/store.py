"""Per-turn Context records and their append-only persistence.

A Context is created at the start of a turn, filled in as the pipeline
runs, and committed at the end. Session attributes are the only part that
flows turn to turn; everything else is exclusive to its turn. Each
context references up to 20 previous turn objects in memory, newest
first. On disk every committed turn is one JSON line in a single file, so
a restarted process can pick a session back up: the next begin_turn finds
the last committed record and continues the turn numbering and session
attributes from there.

User attributes live in a second append-only file keyed by user id; the
last write for a key wins. They survive across sessions.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from topicflow.errors import StorageError, ValidationError

HISTORY_LIMIT = 20

# Session-attribute key holding the list of sub-dialogues already run this
# session; the dialogue managers read and append to it through Context.
STARTED_KEY = "started_dialogues"

_RECORD_FIELDS = ("session_id", "user_id", "turn_index", "utterance",
                  "timestamp", "session", "annotation", "topic_node",
                  "dialogue_id", "dm_state", "response")


@dataclass
class Context:
    session_id: str
    user_id: str
    turn_index: int
    utterance: str
    timestamp: float = field(default_factory=time.time)
    session: dict = field(default_factory=dict)
    history: tuple["Context", ...] = ()
    annotation: dict | None = None
    topic_node: str | None = None
    dialogue_id: str | None = None
    dm_state: str | None = None
    response: str | None = None

    @property
    def executed_dialogues(self) -> tuple[str, ...]:
        return tuple(self.session.get(STARTED_KEY, ()))


def validate_attribute(key: str, value) -> None:
    """Attribute values stay portable: text, number, boolean or text list."""
    if isinstance(value, bool) or isinstance(value, (str, int, float)):
        return
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return
    raise ValidationError(
        f"attribute {key!r} must be text, number, boolean or a list of text, "
        f"got {type(value).__name__}")


def _context_record(context: Context) -> dict:
    return {name: getattr(context, name) for name in _RECORD_FIELDS}


def _context_from_record(record: dict) -> Context:
    return Context(**{name: record[name] for name in _RECORD_FIELDS})


class ContextStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._contexts_path = self.root / "contexts.jsonl"
        self._users_path = self.root / "user_attributes.jsonl"
        self._last: dict[str, Context] = {}
        self._counts: dict[str, int] = {}
        self._users: dict[str, dict] = {}
        self._replay()

    def _replay(self) -> None:
        if self._contexts_path.exists():
            for lineno, line in enumerate(
                    self._contexts_path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    context = _context_from_record(json.loads(line))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise StorageError(
                        f"{self._contexts_path}:{lineno}: bad context record: {exc}")
                self._last[context.session_id] = context
                self._counts[context.session_id] = self._counts.get(
                    context.session_id, 0) + 1
        if self._users_path.exists():
            for line in self._users_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                self._users.setdefault(record["user_id"], {})[record["key"]] = \
                    record["value"]

    # --- turns ---------------------------------------------------------

    def begin_turn(self, session_id: str, user_id: str, utterance: str) -> Context:
        if not session_id or not user_id:
            raise ValidationError("session id and user id must be non-empty")
        prev = self._last.get(session_id)
        if prev is None:
            return Context(session_id=session_id, user_id=user_id,
                           turn_index=0, utterance=utterance)
        history = (prev, *prev.history)[:HISTORY_LIMIT]
        return Context(session_id=session_id, user_id=user_id,
                       turn_index=prev.turn_index + 1, utterance=utterance,
                       session=dict(prev.session), history=history)

    def commit_turn(self, context: Context) -> None:
        if context.response is None:
            raise ValidationError("cannot commit a turn without a response")
        last = self._last.get(context.session_id)
        if last is not None and context.turn_index <= last.turn_index:
            raise ValidationError(
                f"turn {context.turn_index} of session {context.session_id!r} "
                f"does not advance past committed turn {last.turn_index}")
        for key, value in context.session.items():
            validate_attribute(key, value)
        try:
            line = json.dumps(_context_record(context), ensure_ascii=False)
        except TypeError as exc:
            raise ValidationError(f"context is not serializable: {exc}")
        try:
            with open(self._contexts_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        except OSError as exc:
            raise StorageError(f"cannot append to {self._contexts_path}: {exc}")
        self._last[context.session_id] = context
        self._counts[context.session_id] = self._counts.get(context.session_id, 0) + 1

    def load_history(self, session_id: str, limit: int = HISTORY_LIMIT) -> list[Context]:
        """Most recent committed turns for the session, newest first."""
        if limit <= 0 or not self._counts.get(session_id):
            return []
        found: list[Context] = []
        with open(self._contexts_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                if record["session_id"] == session_id:
                    found.append(_context_from_record(record))
        return found[::-1][:limit]

    def turn_count(self, session_id: str) -> int:
        return self._counts.get(session_id, 0)

    # --- user attributes -------------------------------------------------

    def user_attributes_set(self, user_id: str, key: str, value) -> None:
        if not user_id:
            raise ValidationError("user id must be non-empty")
        validate_attribute(key, value)
        record = {"user_id": user_id, "key": key, "value": value}
        try:
            with open(self._users_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        except OSError as exc:
            raise StorageError(f"cannot append to {self._users_path}: {exc}")
        self._users.setdefault(user_id, {})[key] = value

    def user_attributes_get(self, user_id: str, key: str, default=None):
        return self._users.get(user_id, {}).get(key, default)

    def user_attributes(self, user_id: str) -> dict:
        return dict(self._users.get(user_id, {}))
