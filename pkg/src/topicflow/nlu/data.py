"""Dataset file readers and gold-label validation.

Formats (all UTF-8, one record per line unless noted):

    intent / dialogue act   utterance<TAB>label
    sentiment               label<TAB>text          label is 0 or 1
    entity (CoNLL-style)    token<TAB>tag, blank line between utterances
"""

from __future__ import annotations

from dataclasses import dataclass

from topicflow.errors import ParseError, ValidationError


@dataclass(frozen=True)
class TagSet:
    """Entity type labels and the IOB tag list they induce."""

    types: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.types)) != len(self.types):
            raise ValidationError(f"duplicate entity types in {self.types}")

    @property
    def labels(self) -> list[str]:
        out = ["O"]
        for t in self.types:
            out.extend((f"B-{t}", f"I-{t}"))
        return out

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def __len__(self) -> int:
        return 2 * len(self.types) + 1


def read_labeled_lines(path: str) -> list[tuple[str, str]]:
    """Reads "text<TAB>label" pairs, skipping blank lines."""
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cells = line.split("\t")
            if len(cells) != 2 or not cells[0].strip() or not cells[1].strip():
                raise ParseError("expected 'text<TAB>label'", path=path, line=lineno)
            pairs.append((cells[0], cells[1]))
    return pairs


def read_sentiment_data(path: str) -> list[tuple[int, str]]:
    """Reads "label<TAB>text" pairs with binary labels."""
    pairs: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cells = line.split("\t")
            if len(cells) != 2 or cells[0] not in ("0", "1") or not cells[1].strip():
                raise ParseError("expected '0|1<TAB>text'", path=path, line=lineno)
            pairs.append((int(cells[0]), cells[1]))
    return pairs


def validate_iob_sequence(tags: list[str], tagset: TagSet,
                          path: str | None = None, line: int | None = None) -> None:
    """Rejects tags outside the tagset and I-x after O/start/different type."""
    known = set(tagset.labels)
    prev = "O"
    for tag in tags:
        if tag not in known:
            raise ValidationError(_loc(path, line) + f"unknown tag {tag!r}")
        if tag.startswith("I-"):
            entity_type = tag[2:]
            if prev not in (f"B-{entity_type}", f"I-{entity_type}"):
                raise ValidationError(
                    _loc(path, line) + f"dangling {tag!r} after {prev!r} in gold data")
        prev = tag


def _loc(path: str | None, line: int | None) -> str:
    if path is None and line is None:
        return ""
    if path is None:
        return f"line {line}: "
    return f"{path}:{line}: " if line is not None else f"{path}: "


def read_entity_data(path: str, tagset: TagSet) -> list[tuple[list[str], list[str]]]:
    """Reads CoNLL-style token/tag lines into per-utterance examples."""
    examples: list[tuple[list[str], list[str]]] = []
    tokens: list[str] = []
    tags: list[str] = []
    starts_at = 1

    def flush(lineno: int) -> None:
        nonlocal tokens, tags, starts_at
        if tokens:
            validate_iob_sequence(tags, tagset, path=path, line=starts_at)
            examples.append((tokens, tags))
        tokens, tags = [], []
        starts_at = lineno + 1

    with open(path, encoding="utf-8") as fh:
        lineno = 0
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush(lineno)
                continue
            cells = line.split("\t")
            if len(cells) != 2 or not cells[0].strip() or not cells[1].strip():
                raise ParseError("expected 'token<TAB>tag'", path=path, line=lineno)
            if not tokens:
                starts_at = lineno
            tokens.append(cells[0])
            tags.append(cells[1])
        flush(lineno + 1)
    return examples
