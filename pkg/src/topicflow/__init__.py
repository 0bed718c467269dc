"""Topic-graph conversational engine with trainable sub-dialogue managers."""

__version__ = "0.1.0"
