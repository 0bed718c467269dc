from topicflow.topics.content import ContentItem, ContentStore
from topicflow.topics.graph import (
    GENERIC_KINDS,
    TOPIC_KINDS,
    TopicGraph,
    TopicNode,
    build_topic_graph,
    load_topic_graph,
    parse_topic_file,
    reachable_nodes,
    validate_topic_graph,
)
from topicflow.topics.select import (
    DEFAULT_DECAY,
    FOCUS_KEY,
    resolve_topic,
    select_subdialogue,
    select_with_node,
    startable_dialogues,
)

__all__ = [
    "ContentItem",
    "ContentStore",
    "GENERIC_KINDS",
    "TOPIC_KINDS",
    "TopicGraph",
    "TopicNode",
    "build_topic_graph",
    "load_topic_graph",
    "parse_topic_file",
    "reachable_nodes",
    "validate_topic_graph",
    "DEFAULT_DECAY",
    "FOCUS_KEY",
    "resolve_topic",
    "select_subdialogue",
    "select_with_node",
    "startable_dialogues",
]
