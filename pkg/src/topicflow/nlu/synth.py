"""Template corpus generation for model benchmarks and sample bots.

Produces aligned intent/entity data from hand-written templates: 8 intents,
6 entity types, slot values spliced in token-wise so IOB tags are exact by
construction. Everything is driven by one seeded generator, so corpora are
reproducible.
"""

from __future__ import annotations

import numpy as np

from topicflow.nlu.tokenize import tokenize

ENTITY_VALUES: dict[str, list[str]] = {
    "movie": ["the matrix", "star wars", "inception", "jurassic park", "the godfather",
              "casablanca", "alien", "titanic", "avatar", "rocky"],
    "music_genre": ["rock", "jazz", "pop", "blues", "techno", "country", "hip hop",
                    "classical", "reggae", "metal"],
    "person": ["keanu reeves", "taylor swift", "stephen king", "serena williams",
               "james cameron", "freddie mercury", "agatha christie", "lionel messi"],
    "book": ["dune", "moby dick", "war and peace", "the hobbit", "dracula",
             "frankenstein", "hamlet", "the odyssey"],
    "sport": ["tennis", "football", "basketball", "hockey", "baseball", "cricket",
              "golf", "swimming"],
    "food": ["pizza", "sushi", "tacos", "ramen", "pancakes", "lasagna", "curry",
             "burgers"],
}

ENTITY_TYPES = tuple(ENTITY_VALUES)

# (prefix, needs_slot, suffix); slot value is inserted between the halves.
SLOT_TEMPLATES: dict[str, list[tuple[str, str]]] = {
    "tell_topic": [
        ("let's talk about", ""),
        ("i want to chat about", ""),
        ("can we discuss", "for a while"),
        ("how about we talk about", ""),
        ("i feel like discussing", "today"),
    ],
    "request_recommendation": [
        ("can you recommend something like", ""),
        ("suggest me something similar to", ""),
        ("what would you recommend if i enjoy", ""),
        ("please recommend anything close to", ""),
    ],
    "ask_opinion": [
        ("what do you think about", ""),
        ("do you like", ""),
        ("what's your opinion on", ""),
        ("how do you feel about", ""),
    ],
    "ask_info": [
        ("tell me more about", ""),
        ("what do you know about", ""),
        ("give me some facts about", ""),
        ("share some information about", ""),
    ],
}

PLAIN_TEMPLATES: dict[str, list[str]] = {
    "greeting": [
        "hello there",
        "hi how are you doing",
        "hey nice to meet you",
        "good morning friend",
        "hello are you awake",
    ],
    "goodbye": [
        "bye for now",
        "see you later",
        "i have to go now",
        "goodbye and take care",
        "talk to you tomorrow",
    ],
    "agree": [
        "yes absolutely",
        "sure that sounds great",
        "i totally agree with you",
        "yeah you are right",
        "of course definitely",
    ],
    "disagree": [
        "no way",
        "i don't think so",
        "that is not true at all",
        "i completely disagree",
        "absolutely not sorry",
    ],
}

INTENTS = tuple(sorted(list(SLOT_TEMPLATES) + list(PLAIN_TEMPLATES)))


def generate_corpus(size: int, seed: int) -> list[tuple[str, str, list[str], list[str]]]:
    """Returns (text, intent, tokens, IOB tags) rows, one per utterance."""
    rng = np.random.default_rng(seed)
    rows: list[tuple[str, str, list[str], list[str]]] = []
    for _ in range(size):
        intent = INTENTS[int(rng.integers(0, len(INTENTS)))]
        if intent in PLAIN_TEMPLATES:
            templates = PLAIN_TEMPLATES[intent]
            text = templates[int(rng.integers(0, len(templates)))]
            tokens = tokenize(text)
            tags = ["O"] * len(tokens)
        else:
            templates = SLOT_TEMPLATES[intent]
            prefix, suffix = templates[int(rng.integers(0, len(templates)))]
            etype = ENTITY_TYPES[int(rng.integers(0, len(ENTITY_TYPES)))]
            values = ENTITY_VALUES[etype]
            value = values[int(rng.integers(0, len(values)))]
            pre_tokens = tokenize(prefix)
            val_tokens = tokenize(value)
            suf_tokens = tokenize(suffix)
            tokens = pre_tokens + val_tokens + suf_tokens
            tags = (["O"] * len(pre_tokens)
                    + [f"B-{etype}"] + [f"I-{etype}"] * (len(val_tokens) - 1)
                    + ["O"] * len(suf_tokens))
            text = " ".join([prefix, value, suffix]).strip()
            text = " ".join(text.split())
        rows.append((text, intent, tokens, tags))
    return rows


POSITIVE_OPENERS = ["i really loved", "what a wonderful", "i truly enjoyed",
                    "this was an amazing", "such a delightful", "a brilliant and moving"]
NEGATIVE_OPENERS = ["i really hated", "what a terrible", "i could not stand",
                    "this was an awful", "such a boring", "a dreadful and sloppy"]
SENTIMENT_SUBJECTS = ["movie", "film", "story", "album", "performance", "book", "show"]
POSITIVE_CLOSERS = ["it made my day", "i would watch it again", "highly recommended",
                    "the best i have seen", "five stars from me"]
NEGATIVE_CLOSERS = ["it ruined my evening", "i want my time back", "avoid it",
                    "the worst i have seen", "one star from me"]


def generate_sentiment_pairs(size: int, seed: int) -> list[tuple[int, str]]:
    """Balanced (label, text) pairs in review style."""
    rng = np.random.default_rng(seed)
    pairs: list[tuple[int, str]] = []
    for i in range(size):
        label = i % 2
        openers = POSITIVE_OPENERS if label else NEGATIVE_OPENERS
        closers = POSITIVE_CLOSERS if label else NEGATIVE_CLOSERS
        opener = openers[int(rng.integers(0, len(openers)))]
        subject = SENTIMENT_SUBJECTS[int(rng.integers(0, len(SENTIMENT_SUBJECTS)))]
        closer = closers[int(rng.integers(0, len(closers)))]
        pairs.append((label, f"{opener} {subject} and {closer}"))
    return pairs


DA_TEMPLATES: dict[str, list[str]] = {
    "statement": ["i watched a movie yesterday", "the weather is nice today",
                  "my favorite genre is jazz", "i work as a teacher"],
    "question": ["what is your favorite movie", "where do you live",
                 "how old are you", "why do you like jazz"],
    "acknowledgment": ["okay", "i see", "got it thanks", "alright then"],
}


def generate_dialogue_act_pairs(size: int, seed: int) -> list[tuple[str, str]]:
    rng = np.random.default_rng(seed)
    labels = sorted(DA_TEMPLATES)
    pairs: list[tuple[str, str]] = []
    for _ in range(size):
        label = labels[int(rng.integers(0, len(labels)))]
        options = DA_TEMPLATES[label]
        pairs.append((options[int(rng.integers(0, len(options)))], label))
    return pairs
