"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TopicflowError(Exception):
    """Base class for all package-specific errors."""


class ParseError(TopicflowError):
    """A data or definition file failed to parse.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class ValidationError(TopicflowError):
    """A parsed structure violates an invariant (cycles, dangling refs, ...)."""


class ConfigurationError(TopicflowError):
    """The engine or a model is missing a required piece of configuration."""


class HookError(TopicflowError):
    """A registered hook misbehaved (unknown name, bad return value, depth cap)."""


class NoEvidenceError(TopicflowError):
    """Entity-sentiment lookup found no matching document in the corpus."""


class StorageError(TopicflowError):
    """A persistence operation failed; the turn may still have been answered."""
