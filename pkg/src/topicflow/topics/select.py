"""Picking the next sub-dialogue from the topic graph.

Selection runs in two stages. First every reachable topic node that still
has at least one startable sub-dialogue gets the weight decay**distance,
the weights are normalized and one node is drawn. Second a sub-dialogue
is drawn uniformly from that node's startable pool. Nodes whose pool is
empty drop out before normalization, so exhausting a nearby topic shifts
probability mass outward instead of wasting draws.

For the GenericEntity node "startable" means the content store actually
holds a matching item for the entity currently in focus; those turns are
parameterized by the entity, so the per-session started bookkeeping that
guards ordinary sub-dialogues does not apply.
"""

from __future__ import annotations

import numpy as np

from topicflow.hcn.model import can_start
from topicflow.topics.content import ContentStore
from topicflow.topics.graph import TopicGraph, TopicNode, reachable_nodes

DEFAULT_DECAY = 0.5

# Context.session key naming the entity the conversation is currently about.
FOCUS_KEY = "focus_entity"


def startable_dialogues(node: TopicNode, context, hooks,
                        store: ContentStore | None = None) -> list[str]:
    if node.kind == "generic_entity":
        focus = context.session.get(FOCUS_KEY)
        if not focus or store is None:
            return []
        return [kind for kind in node.dialogues if store.has(kind, focus)]
    return [d for d in node.dialogues if can_start(d, context, hooks)]


def select_with_node(graph: TopicGraph, start: str, context, hooks,
                     rng: np.random.Generator, *,
                     store: ContentStore | None = None,
                     decay: float = DEFAULT_DECAY
                     ) -> tuple[str, str] | None:
    """Like select_subdialogue, but also names the node that was drawn."""
    weights: list[float] = []
    pools: list[tuple[str, list[str]]] = []
    for name, distance in reachable_nodes(graph, start):
        pool = startable_dialogues(graph.nodes[name], context, hooks, store)
        if pool:
            weights.append(decay ** distance)
            pools.append((name, pool))
    if not pools:
        return None
    probs = np.asarray(weights, dtype=np.float64)
    probs /= probs.sum()
    name, pool = pools[int(rng.choice(len(pools), p=probs))]
    if len(pool) == 1:
        return name, pool[0]
    return name, pool[int(rng.integers(len(pool)))]


def select_subdialogue(graph: TopicGraph, start: str, context, hooks,
                       rng: np.random.Generator, *,
                       store: ContentStore | None = None,
                       decay: float = DEFAULT_DECAY) -> str | None:
    """Draws the next sub-dialogue id, or None when every pool is empty."""
    picked = select_with_node(graph, start, context, hooks, rng,
                              store=store, decay=decay)
    return None if picked is None else picked[1]


def resolve_topic(graph: TopicGraph, entities, intent: str | None
                  ) -> tuple[TopicNode | None, str | None]:
    """Maps one annotated message to (topic node, focus entity text).

    Precedence: a node bound to the entity's type wins, then a node bound
    to the intent, then the GenericEntity node with the first entity as
    focus. With nothing to anchor on the Recommendation node (if any)
    decides what to talk about.
    """
    entities = list(entities or [])
    for span in entities:
        bound = graph.entity_bindings.get(span.type)
        if bound:
            return graph.nodes[bound], span.text
    if intent:
        bound = graph.intent_bindings.get(intent)
        if bound:
            return graph.nodes[bound], entities[0].text if entities else None
    if entities and graph.generic_entity is not None:
        return graph.generic_entity, entities[0].text
    return graph.recommendation, None
