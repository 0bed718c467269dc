"""Entity-keyed content lines backing the GenericEntity topic.

The store is a flat TSV file, one item per line::

    funfact<TAB>jazz, miles davis<TAB>Kind of Blue was recorded in two sessions.

Column one is the content kind (funfact, showerthought or news), column
two a comma-separated keyword list, column three the text to say. Lookup
is a case-insensitive substring match in either direction, so the entity
"Miles Davis Quintet" still hits the "miles davis" keyword and the entity
"jazz" hits "jazz music".
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from topicflow.errors import ParseError
from topicflow.topics.graph import GENERIC_KINDS


@dataclass(frozen=True)
class ContentItem:
    kind: str
    keywords: tuple[str, ...]
    text: str


def _matches(keyword: str, entity: str) -> bool:
    a, b = keyword.lower().strip(), entity.lower().strip()
    if not a or not b:
        return False
    return a in b or b in a


class ContentStore:
    def __init__(self, items: list[ContentItem] | None = None) -> None:
        self.items: list[ContentItem] = list(items or [])

    @classmethod
    def load(cls, path: str | Path) -> "ContentStore":
        items = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise ParseError(f"line {lineno}: expected kind<TAB>keywords<TAB>text",
                                 path=str(path))
            kind, keywords, text = (p.strip() for p in parts)
            if kind not in GENERIC_KINDS:
                raise ParseError(f"line {lineno}: unknown content kind {kind!r}",
                                 path=str(path))
            if not text:
                raise ParseError(f"line {lineno}: empty content text", path=str(path))
            items.append(ContentItem(
                kind=kind,
                keywords=tuple(k.strip() for k in keywords.split(",") if k.strip()),
                text=text,
            ))
        return cls(items)

    def find(self, kind: str, entity: str) -> list[str]:
        """Texts of the given kind whose keywords match the entity name."""
        return [item.text for item in self.items
                if item.kind == kind
                and any(_matches(k, entity) for k in item.keywords)]

    def has(self, kind: str, entity: str) -> bool:
        return bool(self.find(kind, entity))

    def kinds_for(self, entity: str) -> list[str]:
        """Content kinds with at least one match, in canonical kind order."""
        return [kind for kind in GENERIC_KINDS if self.has(kind, entity)]
