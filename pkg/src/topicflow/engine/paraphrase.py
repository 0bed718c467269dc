"""Restating short user messages before the actual reply.

A message like "I love pizza" occasionally comes back as "you love pizza."
prepended to the bot's answer. The restatement swaps the speaker's person
markers so the bot sounds like it listened, which cheaply covers for
sub-dialogues that otherwise ignore what the user just said.
"""

from __future__ import annotations

import re

import numpy as np

from topicflow.errors import ConfigurationError

# Only short first/second-person messages qualify: long messages produce
# garbled restatements and impersonal ones gain nothing from the echo.
MIN_WORDS = 2
MAX_WORDS = 9

_WORD_RE = re.compile(r"[A-Za-z0-9']+")

# Person-swap table, matched on lowercased tokens. Multi-word entries win
# over shorter ones, so "are you" becomes "if I am" before the bare "you"
# rule can touch it. Replacements carry their own casing.
_RULES = (
    (("my", "mum", "and", "dad"), ("your", "parents")),
    (("are", "you"), ("if", "I", "am")),
    (("am", "i"), ("are", "you")),
    (("i", "am"), ("you", "are")),
    (("you", "are"), ("I", "am")),
    (("i", "was"), ("you", "were")),
    (("you", "were"), ("I", "was")),
    (("i'm",), ("you're",)),
    (("you're",), ("I'm",)),
    (("i",), ("you",)),
    (("you",), ("I",)),
    (("my",), ("your",)),
    (("your",), ("my",)),
    (("me",), ("you",)),
    (("mine",), ("yours",)),
    (("yours",), ("mine",)),
    (("myself",), ("yourself",)),
    (("yourself",), ("myself",)),
)

RULES = tuple(sorted(_RULES, key=lambda rule: len(rule[0]), reverse=True))


def eligible(message: str) -> bool:
    """Whether a message qualifies for restating.

    It must run two to nine words and contain the word "I" or "you"
    (exact token, any casing; "I'm" alone does not count).
    """
    words = [w.lower() for w in _WORD_RE.findall(message)]
    if not MIN_WORDS <= len(words) <= MAX_WORDS:
        return False
    return "i" in words or "you" in words


def restate(message: str) -> str:
    """Swaps person markers in one left-to-right pass.

    Each source position is consumed by at most one rule (longest match
    first), so "I" -> "you" and "you" -> "I" cannot feed each other.
    Unmatched words keep their original casing; punctuation is dropped.
    """
    surfaces = _WORD_RE.findall(message)
    lowered = [w.lower() for w in surfaces]
    out: list[str] = []
    i = 0
    while i < len(surfaces):
        for pattern, replacement in RULES:
            if tuple(lowered[i:i + len(pattern)]) == pattern:
                out.extend(replacement)
                i += len(pattern)
                break
        else:
            out.append(surfaces[i])
            i += 1
    return " ".join(out)


def paraphrase(message: str, rng: np.random.Generator,
               probability: float) -> str | None:
    """Returns the restated message, or None when the echo stays silent.

    Ineligible messages never consume randomness; eligible ones fire with
    the given probability. At probability 0.0 the draw can never win
    because ``rng.random()`` lives in [0, 1).
    """
    if not 0.0 <= probability <= 1.0:
        raise ConfigurationError(
            f"paraphrase probability must be within [0, 1], got {probability}")
    if not eligible(message):
        return None
    if rng.random() >= probability:
        return None
    return restate(message)
