"""Whitespace/punctuation tokenizer shared by every text model.

Tokens are maximal runs of letters, digits, and apostrophes, lowercased.
Punctuation never becomes a token, which makes classification trivially
stable under trailing ?!. marks.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")


def tokenize(text: str) -> list[str]:
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


def tokenize_with_spans(text: str) -> tuple[list[str], list[tuple[int, int]]]:
    """Tokens plus their [start, end) character offsets in the original text."""
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    for m in _TOKEN_RE.finditer(text):
        tokens.append(m.group(0).lower())
        spans.append((m.start(), m.end()))
    return tokens, spans
