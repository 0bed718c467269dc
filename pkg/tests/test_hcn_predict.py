"""Masked prediction, realization, and can-start behavior."""

import logging

import numpy as np
import pytest
import yaml

from topicflow.dialogue import (
    START_STATE, compile_transitions, derive_action_masks, parse_dialogue,
    response_inventory,
)
from topicflow.dialogue.hooks import HookRegistry
from topicflow.errors import HookError, ValidationError
from topicflow.hcn import (
    HcnHyperparams, HcnModel, TurnFeaturizer, apply_action_mask, can_start,
    mark_started, predict_action, realize,
)
from topicflow.tensor import EmbeddingTable, Vocabulary
from topicflow.tensor.functional import softmax

DRINKS = {
    "id": "drinks",
    "start": "bot_greet",
    "nodes": {
        "bot_greet": {"kind": "Bot", "texts": ["Tea or coffee?"],
                      "next": ["user_tea", "user_coffee"]},
        "user_tea": {"kind": "User", "texts": ["tea please", "green tea"],
                     "next": ["bot_tea"]},
        "user_coffee": {"kind": "User", "texts": ["coffee please", "espresso"],
                        "next": ["bot_coffee"]},
        "bot_tea": {"kind": "Bot", "texts": ["Leaf it is.", "Brewing the leaves."],
                    "next": ["user_more"]},
        "bot_coffee": {"kind": "Bot", "texts": ["Beans it is."], "next": []},
        "user_more": {"kind": "User", "texts": ["tell me more"], "next": ["bot_wrap"]},
        "bot_wrap": {"kind": "Bot", "texts": ["Enjoy your cup."], "next": []},
    },
}

WRITER = {
    "id": "writer-popularity",
    "start": "bot_intro",
    "nodes": {
        "bot_intro": {"kind": "Bot", "texts": ["I looked the writer up."],
                      "next": ["user_ask"]},
        "user_ask": {"kind": "User", "texts": ["is she popular", "how known is she"],
                     "next": ["fn_check"]},
        "fn_check": {"kind": "Function", "hook": "popularity_check",
                     "next": ["bot_popular", "bot_niche"]},
        "bot_popular": {"kind": "Bot", "texts": ["Hugely popular, {say_fans} fans."],
                        "next": []},
        "bot_niche": {"kind": "Bot", "texts": ["A niche author."], "next": []},
    },
}

CHAIN = {
    "id": "chained",
    "start": "bot_hi",
    "nodes": {
        "bot_hi": {"kind": "Bot", "texts": ["Hello."], "next": ["user_go"]},
        "user_go": {"kind": "User", "texts": ["go on"], "next": ["fn_first"]},
        "fn_first": {"kind": "Function", "hook": "first", "next": ["fn_second"]},
        "fn_second": {"kind": "Function", "hook": "second", "next": ["bot_end"]},
        "bot_end": {"kind": "Bot", "texts": ["All done."], "next": []},
    },
}


def _graph(spec):
    return parse_dialogue(yaml.safe_dump(spec))


def _model(spec, seed=0):
    graph = _graph(spec)
    words = sorted({w for node in graph.nodes.values() if node.kind == "User"
                    for text in node.texts for w in text.split()})
    table = EmbeddingTable.random(Vocabulary(words), 8, np.random.default_rng(seed))
    rng = np.random.default_rng(seed)
    hyper = HcnHyperparams(lstm_hidden=12, conv_filters=4, conv_widths=(1, 2),
                           activation="tanh")
    featurizer = TurnFeaturizer("cnn", table, rng, conv_widths=(1, 2), conv_filters=4)
    inventory = response_inventory(graph)
    nodes = {cls: graph.nodes[node_id] for cls, node_id, _ in inventory}
    return HcnModel(graph.id, inventory, nodes, derive_action_masks(graph),
                    featurizer, hyper, rng), graph


class _Context:
    def __init__(self):
        self.session = {}


def test_masked_renormalization_oracle():
    # softmax([2, 1, 0]) keeps indices 0 and 2: 0.6652/(0.6652+0.0900).
    dist, finished = apply_action_mask(softmax(np.array([2.0, 1.0, 0.0])),
                                       np.array([1.0, 0.0, 1.0]))
    assert not finished
    np.testing.assert_allclose(dist, [0.8808, 0.0, 0.1192], atol=1e-4)
    assert abs(dist.sum() - 1.0) < 1e-9


def test_all_ones_mask_matches_unmasked_argmax():
    model, _ = _model(DRINKS)
    state = model.mark_realized(model.initial_state(), "bot_greet")
    feats, _ = model.featurize("tea please", None)
    probs, _, _ = model.class_probabilities(feats, state)
    dist, _ = apply_action_mask(probs, np.ones_like(probs))
    assert int(np.argmax(dist)) == int(np.argmax(probs))
    np.testing.assert_allclose(dist, probs)


def test_all_zero_row_signals_finished():
    model, _ = _model(DRINKS)
    state = model.mark_realized(model.initial_state(), "bot_wrap")
    assert state.finished
    feats, _ = model.featurize("anything", "bot_tea")
    cls, dist, after = predict_action(model, state, feats)
    assert cls is None
    assert after.finished
    assert not dist.any()


def test_predicted_class_respects_mask():
    model, _ = _model(DRINKS)
    state = model.mark_realized(model.initial_state(), "bot_greet")
    feats, _ = model.featurize("green tea", None)
    cls, dist, after = predict_action(model, state, feats)
    permitted = set(model.mask_table.permitted("bot_greet"))
    assert cls in permitted
    assert after.last_predicted == cls
    for name, p in zip(model.classes, dist):
        if name not in permitted:
            assert p == 0.0
    assert abs(dist.sum() - 1.0) < 1e-9


def test_state_advances_and_prev_onehot_tracks_prediction():
    model, _ = _model(DRINKS)
    state = model.mark_realized(model.initial_state(), "bot_greet")
    feats, _ = model.featurize("tea please", state.last_predicted)
    np.testing.assert_array_equal(feats.prev_action, np.zeros(len(model.classes)))
    cls, _, after = predict_action(model, state, feats)
    assert not np.array_equal(after.h, state.h)
    onehot = model.prev_onehot(after.last_predicted)
    assert onehot[model.class_index[cls]] == 1.0
    assert onehot.sum() == 1.0


def test_mask_fuzz_never_escapes_mask():
    rng = np.random.default_rng(77)
    for spec in (DRINKS, WRITER, CHAIN):
        table = derive_action_masks(_graph(spec))
        rows = [START_STATE, *table.classes]
        k = len(table.classes)
        draws = 10_000 // len(rows) + 1
        for state in rows:
            row = table.row(state)
            for _ in range(draws):
                probs = softmax(rng.normal(size=k) * 4.0)
                dist, finished = apply_action_mask(probs, row)
                if finished:
                    assert not row.any()
                    assert not dist.any()
                    continue
                assert abs(dist.sum() - 1.0) < 1e-9
                assert (dist[row == 0.0] == 0.0).all()
                assert row[int(np.argmax(dist))] == 1.0


def test_predict_action_fuzz_stays_legal():
    model, _ = _model(DRINKS)
    rng = np.random.default_rng(3)
    words = ["tea", "coffee", "please", "more", "espresso", "green"]
    states = [START_STATE] + [c for c in model.classes if model.mask_table.row(c).any()]
    for i in range(300):
        mask_state = states[i % len(states)]
        state = model.mark_realized(model.initial_state(), mask_state) \
            if mask_state != START_STATE else model.initial_state()
        prev = rng.choice([None, *model.classes])
        text = " ".join(rng.choice(words, size=rng.integers(1, 5)))
        feats, _ = model.featurize(text, None if prev is None else str(prev))
        cls, dist, _ = predict_action(model, state, feats)
        assert cls in model.mask_table.permitted(mask_state)
        assert abs(dist.sum() - 1.0) < 1e-9


def test_realize_single_variant_verbatim():
    model, _ = _model(DRINKS)
    out = realize(model, "bot_coffee", _Context(), HookRegistry(), np.random.default_rng(0))
    assert out.text == "Beans it is."
    assert out.final_class == "bot_coffee"
    assert out.chain == ("bot_coffee",)


def test_realize_draws_variants_uniformly():
    model, _ = _model(DRINKS)
    rng = np.random.default_rng(123)
    seen = {realize(model, "bot_tea", _Context(), HookRegistry(), rng).text
            for _ in range(50)}
    assert seen == {"Leaf it is.", "Brewing the leaves."}


def test_realize_threshold_function_routes_by_context():
    model, _ = _model(WRITER)
    hooks = HookRegistry()
    hooks.register_function(
        "popularity_check",
        lambda ctx: "bot_popular" if ctx.session["fans"] > 1000 else "bot_niche")
    hooks.register_text_action("say_fans", lambda ctx: ctx.session["fans"])

    ctx = _Context()
    ctx.session["fans"] = 250_000
    out = realize(model, "fn_check", ctx, hooks, np.random.default_rng(0))
    assert out.text == "Hugely popular, 250000 fans."
    assert out.final_class == "bot_popular"
    assert out.chain == ("fn_check", "bot_popular")

    ctx.session["fans"] = 40
    out = realize(model, "fn_check", ctx, hooks, np.random.default_rng(0))
    assert out.text == "A niche author."
    assert out.final_class == "bot_niche"


def test_realize_chains_functions_in_order():
    model, _ = _model(CHAIN)
    order = []
    hooks = HookRegistry()
    hooks.register_function("first", lambda ctx: order.append("first") or "fn_second")
    hooks.register_function("second", lambda ctx: order.append("second") or "bot_end")
    out = realize(model, "fn_first", _Context(), hooks, np.random.default_rng(0))
    assert out.text == "All done."
    assert order == ["first", "second"]
    assert out.chain == ("fn_first", "fn_second", "bot_end")


def test_realize_rejects_unknown_successor():
    model, _ = _model(CHAIN)
    hooks = HookRegistry()
    hooks.register_function("first", lambda ctx: "bot_imaginary")
    with pytest.raises(HookError, match="bot_imaginary"):
        realize(model, "fn_first", _Context(), hooks, np.random.default_rng(0))


def test_realize_caps_function_depth():
    model, _ = _model(CHAIN)
    hooks = HookRegistry()
    hooks.register_function("first", lambda ctx: "fn_second")
    hooks.register_function("second", lambda ctx: "fn_first")
    with pytest.raises(ValidationError, match="exceeded"):
        realize(model, "fn_first", _Context(), hooks, np.random.default_rng(0))


def test_realize_unknown_class_rejected():
    model, _ = _model(DRINKS)
    with pytest.raises(ValidationError, match="no response class"):
        realize(model, "bot_missing", _Context(), HookRegistry(), np.random.default_rng(0))


def test_realize_unregistered_hook_raises():
    model, _ = _model(WRITER)
    with pytest.raises(HookError, match="popularity_check"):
        realize(model, "fn_check", _Context(), HookRegistry(), np.random.default_rng(0))


def test_can_start_defaults_to_once_per_session():
    ctx = _Context()
    hooks = HookRegistry()
    assert can_start("drinks", ctx, hooks)
    mark_started("drinks", ctx)
    assert not can_start("drinks", ctx, hooks)
    assert can_start("writer-popularity", ctx, hooks)


def test_can_start_hook_vetoes_and_stashes():
    hooks = HookRegistry()

    def needs_fans(ctx):
        if "fans" not in ctx.session:
            return False
        ctx.session["prepared"] = True
        return True

    hooks.register_can_start("writer-popularity", needs_fans)
    ctx = _Context()
    assert not can_start("writer-popularity", ctx, hooks)
    ctx.session["fans"] = 9000
    assert can_start("writer-popularity", ctx, hooks)
    assert ctx.session["prepared"]


def test_can_start_hook_failure_logs_and_refuses(caplog):
    hooks = HookRegistry()
    hooks.register_can_start("drinks", lambda ctx: 1 / 0)
    with caplog.at_level(logging.WARNING, logger="topicflow.hcn.model"):
        assert not can_start("drinks", _Context(), hooks)
    assert any("drinks" in record.getMessage() for record in caplog.records)


def test_compiled_fixture_sanity():
    # Two tea variants walk the long path, two coffee variants the short one.
    graph = _graph(DRINKS)
    assert len(compile_transitions(graph)) == 4
