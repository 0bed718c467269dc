import numpy as np
import pytest

from topicflow.dialogue import (
    START_STATE,
    ActionMaskTable,
    compile_transitions,
    derive_action_masks,
    parse_dialogue,
    response_inventory,
)
from topicflow.dialogue.compile import replay_states, verify_replay
from topicflow.dialogue.graph import DialogueGraph, DialogueNode

BRANCHING = """
id: branching
start: bot1
nodes:
  bot1: {kind: Bot, texts: [Hello], next: [usera, userb]}
  usera: {kind: User, texts: [alpha], next: [bot2]}
  userb: {kind: User, texts: [beta], next: [bot3]}
  bot2: {kind: Bot, texts: [Answer A]}
  bot3: {kind: Bot, texts: [Answer B]}
"""

WITH_FUNCTION = """
id: lookup
start: bot1
nodes:
  bot1: {kind: Bot, texts: ["What should I look up?"], next: [user1]}
  user1: {kind: User, texts: [look up cats], next: [fn]}
  fn: {kind: Function, hook: run_lookup, next: [bot2, bot3]}
  bot2: {kind: Bot, texts: [Found it.]}
  bot3: {kind: Bot, texts: [Nothing found.]}
"""


def test_two_branches_give_two_transitions():
    transitions = compile_transitions(parse_dialogue(BRANCHING))
    assert len(transitions) == 2
    assert transitions[0].steps == (("alpha", "bot2"),)
    assert transitions[1].steps == (("beta", "bot3"),)


def test_single_bot_dialogue_gives_one_empty_transition():
    graph = parse_dialogue("id: d\nstart: a\nnodes:\n  a: {kind: Bot, texts: [hi]}\n")
    transitions = compile_transitions(graph)
    assert len(transitions) == 1
    assert transitions[0].steps == ()
    assert transitions[0].path == ("a",)


def test_user_variants_multiply_but_bot_variants_do_not():
    text = """
id: d
start: a
nodes:
  a: {kind: Bot, texts: [hi, hello, hey], next: [u]}
  u: {kind: User, texts: [one, two, three], next: [b]}
  b: {kind: Bot, texts: [bye, so long]}
"""
    transitions = compile_transitions(parse_dialogue(text))
    assert len(transitions) == 3
    assert [t.steps[0][0] for t in transitions] == ["one", "two", "three"]
    assert all(t.steps[0][1] == "b" for t in transitions)


def test_transition_order_is_depth_first_file_order():
    text = """
id: d
start: a
nodes:
  a: {kind: Bot, texts: [hi], next: [u1, u2]}
  u1: {kind: User, texts: [p, q], next: [b1]}
  u2: {kind: User, texts: [r], next: [b2]}
  b1: {kind: Bot, texts: [one], next: [u3]}
  u3: {kind: User, texts: [s, t], next: [b3]}
  b3: {kind: Bot, texts: [deep]}
  b2: {kind: Bot, texts: [two]}
"""
    transitions = compile_transitions(parse_dialogue(text))
    got = [tuple(s[0] for s in t.steps) for t in transitions]
    assert got == [("p", "s"), ("p", "t"), ("q", "s"), ("q", "t"), ("r",)]


def test_inventory_lists_bot_and_function_classes_in_file_order():
    inv = response_inventory(parse_dialogue(WITH_FUNCTION))
    assert inv == [("bot1", "bot1", "Bot"), ("fn", "fn", "Function"),
                   ("bot2", "bot2", "Bot"), ("bot3", "bot3", "Bot")]


def test_linear_mask_permits_only_next_bot():
    text = """
id: d
start: bot1
nodes:
  bot1: {kind: Bot, texts: [hi], next: [u]}
  u: {kind: User, texts: [ok], next: [bot2]}
  bot2: {kind: Bot, texts: [bye]}
"""
    table = derive_action_masks(parse_dialogue(text))
    assert table.permitted("bot1") == ["bot2"]


def test_function_passthrough_mask():
    # Function nodes are response classes themselves and also transparent:
    # after bot1 the permitted set is the function plus everything the
    # function can settle on.
    table = derive_action_masks(parse_dialogue(WITH_FUNCTION))
    assert table.permitted("bot1") == ["fn", "bot2", "bot3"]
    assert table.permitted("fn") == ["bot2", "bot3"]


def test_terminal_rows_are_all_zero():
    table = derive_action_masks(parse_dialogue(BRANCHING))
    np.testing.assert_array_equal(table.row("bot2"), np.zeros(3))
    np.testing.assert_array_equal(table.row("bot3"), np.zeros(3))


def test_start_state_permits_exactly_the_start_class():
    table = derive_action_masks(parse_dialogue(BRANCHING))
    assert table.permitted(START_STATE) == ["bot1"]
    assert table.row(START_STATE).sum() == 1.0


def test_replay_never_steps_onto_masked_class():
    for text in (BRANCHING, WITH_FUNCTION):
        graph = parse_dialogue(text)
        verify_replay(compile_transitions(graph), graph, derive_action_masks(graph))


def test_replay_states_follow_function_passthrough():
    # The start Bot is realized on entry, so the first user turn is masked
    # by the start node's own class, and a Function settling on a Bot moves
    # the mask state past itself to that Bot.
    graph = parse_dialogue(WITH_FUNCTION)
    tr = compile_transitions(graph)[0]
    assert replay_states(tr, graph) == [("bot1", "fn")]


def test_mask_table_tsv_roundtrip():
    table = derive_action_masks(parse_dialogue(WITH_FUNCTION))
    text = table.to_tsv()
    loaded = ActionMaskTable.from_tsv(text)
    assert loaded.classes == table.classes
    for state in (START_STATE, *table.classes):
        np.testing.assert_array_equal(loaded.row(state), table.row(state))


def _random_graph(rng: np.random.Generator) -> DialogueGraph:
    """Random valid dialogue graph: <= 12 nodes, <= 3 texts per User node."""
    kinds = {"n0": "Bot"}
    successors: dict[str, list[str]] = {"n0": []}
    order = ["n0"]
    allowed = {"Bot": ("User",), "User": ("Bot", "Function"), "Function": ("Bot", "Function")}
    n_nodes = int(rng.integers(1, 13))
    for i in range(1, n_nodes):
        # attach under a random earlier node so everything stays reachable
        parent = order[int(rng.integers(0, len(order)))]
        kind = allowed[kinds[parent]][int(rng.integers(0, len(allowed[kinds[parent]])))]
        nid = f"n{i}"
        kinds[nid] = kind
        successors[nid] = []
        successors[parent].append(nid)
        order.append(nid)
        # sprinkle extra forward edges (earlier -> later keeps it acyclic)
        for j in range(i):
            other = order[j]
            if other != parent and kind in allowed[kinds[other]] and rng.random() < 0.15:
                successors[other].append(nid)
    # User nodes cannot be terminal: give them a Bot child
    for nid in list(order):
        if kinds[nid] == "User" and not successors[nid]:
            child = f"n{len(order)}x"
            kinds[child] = "Bot"
            successors[child] = []
            successors[nid].append(child)
            order.append(child)
    nodes = {}
    for nid in order:
        kind = kinds[nid]
        if kind == "Function":
            nodes[nid] = DialogueNode(id=nid, kind=kind, hook="noop",
                                      successors=tuple(successors[nid]))
        else:
            n_texts = int(rng.integers(1, 4)) if kind == "User" else 1
            texts = tuple(f"{nid} text {k}" for k in range(n_texts))
            nodes[nid] = DialogueNode(id=nid, kind=kind, texts=texts,
                                      successors=tuple(successors[nid]))
    return DialogueGraph(id="random", start="n0", nodes=nodes)


def _count_paths_with_variants(graph: DialogueGraph, node_id: str) -> int:
    """Independent recursive count of transition expansions from a node."""
    node = graph.nodes[node_id]
    own = len(node.texts) if node.kind == "User" else 1
    if not node.successors:
        return own
    return own * sum(_count_paths_with_variants(graph, s) for s in node.successors)


def test_transition_count_matches_recursive_oracle_on_200_random_graphs():
    rng = np.random.default_rng(77)
    for case in range(200):
        graph = _random_graph(rng)
        from topicflow.dialogue.graph import validate_dialogue
        validate_dialogue(graph)
        expected = _count_paths_with_variants(graph, graph.start)
        transitions = compile_transitions(graph)
        assert len(transitions) == expected, f"case {case}"
        verify_replay(transitions, graph, derive_action_masks(graph))


def test_transitions_are_deterministic():
    graph = parse_dialogue(WITH_FUNCTION)
    assert compile_transitions(graph) == compile_transitions(graph)
