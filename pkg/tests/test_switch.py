"""Switch-corpus generation and the context-aware detector."""

import math

import numpy as np
import pytest
import yaml

from topicflow.dialogue import compile_transitions, parse_dialogue
from topicflow.errors import (
    ConfigurationError, ParseError, StorageError, ValidationError,
)
from topicflow.nlu.tokenize import tokenize
from topicflow.switch import (
    EMPTY_RESPONSE,
    SwitchConfig,
    SwitchExample,
    detect_switch,
    evaluate_switch_accuracy,
    generate_switch_dataset,
    load_switch,
    load_switch_dataset,
    save_switch,
    save_switch_dataset,
    train_switch,
)
from topicflow.tensor import EmbeddingTable, Vocabulary

GENRE = {
    "id": "genre",
    "start": "bot_ask",
    "nodes": {
        "bot_ask": {"kind": "Bot", "texts": ["Which music genre is your favorite?"],
                    "next": ["user_genre"]},
        "user_genre": {"kind": "User",
                       "texts": ["I like pop music.", "I like rock music.",
                                 "I enjoy classical."],
                       "next": ["bot_ack"]},
        "bot_ack": {"kind": "Bot", "texts": ["Great taste."], "next": []},
    },
}

HOBBY = {
    "id": "hobby",
    "start": "bot_ask",
    "nodes": {
        "bot_ask": {"kind": "Bot", "texts": ["What do you like?"],
                    "next": ["user_like"]},
        "user_like": {"kind": "User",
                      "texts": ["I like hiking.", "I enjoy reading books.",
                                "I like cooking."],
                      "next": ["bot_ack"]},
        "bot_ack": {"kind": "Bot", "texts": ["Nice."], "next": []},
    },
}

MUSIC_INTENTS = ["I like pop music.", "I love jazz.",
                 "Pop music is my favorite thing."]

# Deliberately shares no tokens with the dialogues' own user answers.
OFF_TOPIC_INTENTS = ["lets talk about football instead",
                     "tell me the latest news",
                     "switch to movies please",
                     "can we chat about sports"]


def _graph(spec):
    return parse_dialogue(yaml.safe_dump(spec))


def _graphs():
    genre, hobby = _graph(GENRE), _graph(HOBBY)
    return {genre.id: genre, hobby.id: hobby}


def _transitions(graphs, repeats=1):
    out = []
    for graph in graphs.values():
        out.extend(compile_transitions(graph) * repeats)
    return out


def _table_for(texts, dim=12, seed=4):
    words = sorted({w for text in texts for w in tokenize(text)})
    return EmbeddingTable.random(Vocabulary(words), dim, np.random.default_rng(seed))


def _all_texts(graphs, intents):
    texts = list(intents)
    for graph in graphs.values():
        for node in graph.nodes.values():
            texts.extend(node.texts)
    return texts


_SMALL = SwitchConfig(conv_widths=(1, 2), conv_filters=8, lstm_hidden=12,
                      learning_rate=0.01, epochs=6)


# --- corpus generation -------------------------------------------------------

def test_mix_rate_zero_keeps_every_stay_turn():
    graphs = _graphs()
    examples = generate_switch_dataset(_transitions(graphs), MUSIC_INTENTS,
                                       0.0, np.random.default_rng(0),
                                       graphs=graphs)
    assert examples
    assert all(ex.label == 0 for ex in examples)
    user_texts = GENRE["nodes"]["user_genre"]["texts"] + HOBBY["nodes"]["user_like"]["texts"]
    assert all(ex.message in user_texts for ex in examples)


def test_mix_rate_one_replaces_every_turn():
    graphs = _graphs()
    examples = generate_switch_dataset(_transitions(graphs), MUSIC_INTENTS,
                                       1.0, np.random.default_rng(0),
                                       graphs=graphs)
    assert all(ex.label == 1 for ex in examples)
    assert all(ex.message in MUSIC_INTENTS for ex in examples)


def test_mix_rate_fraction_within_three_sigma():
    graphs = _graphs()
    transitions = _transitions(graphs, repeats=200)  # 1200 user turns
    examples = generate_switch_dataset(transitions, MUSIC_INTENTS, 0.3,
                                       np.random.default_rng(1), graphs=graphs)
    n = len(examples)
    assert n == 1200
    switches = sum(ex.label for ex in examples)
    sigma = math.sqrt(n * 0.3 * 0.7)
    assert abs(switches - n * 0.3) <= 3 * sigma


def test_generation_deterministic_under_seed():
    graphs = _graphs()
    transitions = _transitions(graphs, repeats=5)

    def run(seed):
        return generate_switch_dataset(transitions, MUSIC_INTENTS, 0.4,
                                       np.random.default_rng(seed), graphs=graphs)

    assert run(9) == run(9)
    assert run(9) != run(10)


def test_prev_response_is_nearest_bot_text():
    graphs = _graphs()
    examples = generate_switch_dataset(_transitions(graphs), MUSIC_INTENTS,
                                       0.0, np.random.default_rng(2),
                                       graphs=graphs)
    prompts = {"Which music genre is your favorite?", "What do you like?"}
    assert {ex.prev_response for ex in examples} == prompts


def test_prev_response_skips_function_nodes():
    spec = {
        "id": "fn-between",
        "start": "bot_hi",
        "nodes": {
            "bot_hi": {"kind": "Bot", "texts": ["Hello."], "next": ["user_go"]},
            "user_go": {"kind": "User", "texts": ["go on"], "next": ["fn_hop"]},
            "fn_hop": {"kind": "Function", "hook": "hop", "next": ["bot_mid"]},
            "bot_mid": {"kind": "Bot", "texts": ["Midway."], "next": ["user_end"]},
            "user_end": {"kind": "User", "texts": ["wrap up"], "next": ["bot_bye"]},
            "bot_bye": {"kind": "Bot", "texts": ["Bye."], "next": []},
        },
    }
    graph = _graph(spec)
    examples = generate_switch_dataset(compile_transitions(graph), MUSIC_INTENTS,
                                       0.0, np.random.default_rng(3),
                                       graphs={graph.id: graph})
    assert [ex.prev_response for ex in examples] == ["Hello.", "Midway."]


def test_first_turn_sentinel_rows_train():
    # Compiled walks always have a bot prompt before each user turn; the
    # empty sentinel enters through hand-written first-turn rows instead.
    dataset = [SwitchExample(EMPTY_RESPONSE, "hi there", 0),
               SwitchExample(EMPTY_RESPONSE, "lets talk about football", 1),
               SwitchExample("What do you like?", "I like hiking.", 0)] * 10
    table = _table_for(["hi there", "lets talk about football",
                        "What do you like?", "I like hiking."])
    model = train_switch(dataset, _SMALL, seed=5, table=table)
    assert 0.0 <= detect_switch(model, EMPTY_RESPONSE, "hi there") <= 1.0


def test_bot_variants_all_drawn():
    spec = {
        "id": "variants",
        "start": "bot_ask",
        "nodes": {
            "bot_ask": {"kind": "Bot", "texts": ["First wording?", "Second wording?"],
                        "next": ["user_any"]},
            "user_any": {"kind": "User", "texts": ["sure"], "next": ["bot_done"]},
            "bot_done": {"kind": "Bot", "texts": ["Done."], "next": []},
        },
    }
    graph = _graph(spec)
    transitions = compile_transitions(graph) * 100
    examples = generate_switch_dataset(transitions, MUSIC_INTENTS, 0.0,
                                       np.random.default_rng(5),
                                       graphs={graph.id: graph})
    seen = {ex.prev_response for ex in examples}
    assert seen == {"First wording?", "Second wording?"}


def test_generation_validations():
    graphs = _graphs()
    transitions = _transitions(graphs)
    rng = np.random.default_rng(6)
    with pytest.raises(ValidationError, match="at least one transition"):
        generate_switch_dataset([], MUSIC_INTENTS, 0.3, rng, graphs=graphs)
    with pytest.raises(ValidationError, match="intent utterances"):
        generate_switch_dataset(transitions, [], 0.3, rng, graphs=graphs)
    with pytest.raises(ValidationError, match="mix_rate"):
        generate_switch_dataset(transitions, MUSIC_INTENTS, 1.5, rng, graphs=graphs)
    with pytest.raises(ValidationError, match="mix_rate"):
        generate_switch_dataset(transitions, MUSIC_INTENTS, -0.1, rng, graphs=graphs)
    with pytest.raises(ValidationError, match="no dialogue graph"):
        generate_switch_dataset(transitions, MUSIC_INTENTS, 0.3, rng,
                                graphs={"genre": graphs["genre"]})


def test_corpus_roundtrip(tmp_path):
    examples = [SwitchExample("", "hi there", 0),
                SwitchExample("What do you like?", "I like pop music.", 1)]
    path = tmp_path / "corpus.tsv"
    save_switch_dataset(examples, path)
    assert load_switch_dataset(path) == examples
    assert path.read_text(encoding="utf-8").splitlines()[0] == "0\t\thi there"


def test_corpus_rejects_tabs(tmp_path):
    with pytest.raises(ValidationError, match="tab or newline"):
        save_switch_dataset([SwitchExample("a\tb", "c", 0)], tmp_path / "x.tsv")


def test_corpus_bad_line_named(tmp_path):
    path = tmp_path / "corpus.tsv"
    path.write_text("0\ta\tb\n2\ta\tb\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 2"):
        load_switch_dataset(path)


# --- detector ----------------------------------------------------------------

@pytest.fixture(scope="module")
def scenario_model():
    """Trained on stays from both dialogues with music intents mixed in."""
    graphs = _graphs()
    transitions = _transitions(graphs, repeats=30)
    examples = generate_switch_dataset(transitions, MUSIC_INTENTS, 0.3,
                                       np.random.default_rng(7), graphs=graphs)
    table = _table_for(_all_texts(graphs, MUSIC_INTENTS))
    return train_switch(examples, _SMALL, seed=11, table=table)


def test_distribution_sums_to_one(scenario_model):
    rng = np.random.default_rng(8)
    probes = ["I like pop music.", "what", "", "I enjoy classical.",
              "tell me the latest news please"]
    for _ in range(20):
        prev = probes[int(rng.integers(len(probes)))]
        msg = probes[int(rng.integers(len(probes)))]
        probs = scenario_model.probabilities(prev, msg)
        assert probs.shape == (2,)
        assert abs(float(probs.sum()) - 1.0) <= 1e-9
        assert 0.0 <= detect_switch(scenario_model, prev, msg) <= 1.0


def test_same_message_flips_with_context(scenario_model):
    # The same utterance reads as a topic change after an open question but
    # as a direct answer after the genre question.
    asked_open = detect_switch(scenario_model, "What do you like?",
                               "I like pop music.")
    asked_genre = detect_switch(scenario_model, "Which music genre is your favorite?",
                                "I like pop music.")
    assert asked_open > 0.5
    assert asked_genre < 0.5


def test_training_deterministic():
    graphs = _graphs()
    transitions = _transitions(graphs, repeats=10)
    examples = generate_switch_dataset(transitions, MUSIC_INTENTS, 0.3,
                                       np.random.default_rng(12), graphs=graphs)
    table = _table_for(_all_texts(graphs, MUSIC_INTENTS))
    first = train_switch(examples, _SMALL, seed=21, table=table)
    second = train_switch(examples, _SMALL, seed=21, table=table)
    for key, value in first.state().items():
        assert value.tobytes() == second.state()[key].tobytes(), key
    probe = detect_switch(first, "What do you like?", "I love jazz.")
    assert probe == detect_switch(second, "What do you like?", "I love jazz.")


def test_heldout_accuracy_on_generated_corpus():
    graphs = _graphs()
    transitions = _transitions(graphs, repeats=50)  # 300 turns
    examples = generate_switch_dataset(transitions, OFF_TOPIC_INTENTS, 0.35,
                                       np.random.default_rng(13), graphs=graphs)
    rng = np.random.default_rng(14)
    order = rng.permutation(len(examples))
    held = max(1, len(examples) // 5)
    held_out = [examples[i] for i in order[:held]]
    training = [examples[i] for i in order[held:]]
    table = _table_for(_all_texts(graphs, OFF_TOPIC_INTENTS))
    model = train_switch(training, _SMALL, seed=15, table=table)
    assert evaluate_switch_accuracy(model, held_out) >= 0.9


def test_empty_prev_response_is_fine(scenario_model):
    p = detect_switch(scenario_model, EMPTY_RESPONSE, "I like pop music.")
    assert 0.0 <= p <= 1.0


def test_untrained_rejects_empty_dataset():
    table = _table_for(["anything"])
    with pytest.raises(ConfigurationError, match="non-empty"):
        train_switch([], _SMALL, seed=0, table=table)


# --- persistence ---------------------------------------------------------------

def test_save_load_roundtrip(tmp_path, scenario_model):
    graphs = _graphs()
    table = _table_for(_all_texts(graphs, MUSIC_INTENTS))
    root = save_switch(scenario_model, tmp_path / "switch")
    loaded = load_switch(root, table)
    probes = [("What do you like?", "I like pop music."),
              ("Which music genre is your favorite?", "I like pop music."),
              ("", "hello there")]
    for prev, msg in probes:
        assert detect_switch(loaded, prev, msg) == detect_switch(
            scenario_model, prev, msg)
    assert loaded.config == scenario_model.config


def test_load_missing_raises(tmp_path):
    table = _table_for(["anything"])
    with pytest.raises(StorageError, match="no saved switch detector"):
        load_switch(tmp_path / "nowhere", table)


def test_load_wrong_embedding_dim(tmp_path, scenario_model):
    root = save_switch(scenario_model, tmp_path / "switch")
    graphs = _graphs()
    small = _table_for(_all_texts(graphs, MUSIC_INTENTS), dim=6)
    with pytest.raises(ConfigurationError, match="12-dim"):
        load_switch(root, small)
