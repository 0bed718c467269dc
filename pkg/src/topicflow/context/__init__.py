from topicflow.context.store import (
    HISTORY_LIMIT,
    STARTED_KEY,
    Context,
    ContextStore,
    validate_attribute,
)

__all__ = [
    "HISTORY_LIMIT",
    "STARTED_KEY",
    "Context",
    "ContextStore",
    "validate_attribute",
]
