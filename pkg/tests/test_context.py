"""Turn contexts, history chaining, and the append-only stores."""

from dataclasses import replace

import numpy as np
import pytest

from topicflow.context import HISTORY_LIMIT, Context, ContextStore
from topicflow.errors import StorageError, ValidationError
from topicflow.hcn import mark_started


@pytest.fixture()
def store(tmp_path):
    return ContextStore(tmp_path / "state")


def _answer(store, context, response="ok"):
    context.response = response
    store.commit_turn(context)
    return context


def test_first_turn_is_blank(store):
    context = store.begin_turn("s1", "u1", "hello")
    assert context.turn_index == 0
    assert context.history == ()
    assert context.session == {}
    assert context.utterance == "hello"
    assert context.response is None


def test_session_attribute_propagates(store):
    context = store.begin_turn("s1", "u1", "hi")
    context.session["mood"] = "cheerful"
    _answer(store, context)
    following = store.begin_turn("s1", "u1", "again")
    assert following.session["mood"] == "cheerful"
    # The next turn gets a copy, not a shared dict.
    following.session["mood"] = "tired"
    assert context.session["mood"] == "cheerful"


def test_turn_indexes_strictly_increase(store):
    for expected in range(5):
        context = store.begin_turn("s1", "u1", f"turn {expected}")
        assert context.turn_index == expected
        _answer(store, context)


def test_history_links_previous_turns(store):
    first = _answer(store, store.begin_turn("s1", "u1", "one"))
    second = store.begin_turn("s1", "u1", "two")
    assert second.history == (first,)
    assert second.history[0] is first


def test_history_caps_at_twenty(store):
    for i in range(24):
        _answer(store, store.begin_turn("s1", "u1", f"m{i}"))
    twenty_fifth = store.begin_turn("s1", "u1", "m24")
    assert twenty_fifth.turn_index == 24
    assert len(twenty_fifth.history) == HISTORY_LIMIT
    assert twenty_fifth.history[0].turn_index == 23
    assert twenty_fifth.history[-1].turn_index == 4


def test_commit_requires_response(store):
    context = store.begin_turn("s1", "u1", "hi")
    with pytest.raises(ValidationError, match="without a response"):
        store.commit_turn(context)


def test_commit_must_advance(store):
    context = _answer(store, store.begin_turn("s1", "u1", "hi"))
    stale = replace(context, history=())
    with pytest.raises(ValidationError, match="does not advance"):
        store.commit_turn(stale)


def test_commit_load_roundtrip(store):
    context = store.begin_turn("s1", "u1", "what's up")
    context.session["topic"] = "jazz"
    context.annotation = {"intent": "Music", "entities": []}
    context.topic_node = "Music"
    context.dialogue_id = "music_chat"
    context.dm_state = "b64:ZmFrZQ=="
    context.response = "Plenty."
    store.commit_turn(context)
    loaded = store.load_history("s1", 1)
    assert loaded == [replace(context, history=())]


def test_load_unknown_session(store):
    assert store.load_history("ghost") == []


def test_load_history_limit_newest_first(store):
    for i in range(6):
        _answer(store, store.begin_turn("s1", "u1", f"m{i}"), response=f"r{i}")
    recent = store.load_history("s1", 3)
    assert [c.turn_index for c in recent] == [5, 4, 3]
    assert [c.response for c in recent] == ["r5", "r4", "r3"]


def test_sessions_never_cross(store):
    rng = np.random.default_rng(31)
    sessions = [f"s{k}" for k in range(4)]
    sent: dict[str, list[str]] = {s: [] for s in sessions}
    for i in range(120):
        sid = sessions[int(rng.integers(len(sessions)))]
        context = store.begin_turn(sid, f"user-{sid}", f"{sid} message {i}")
        context.session["own"] = sid
        assert set(context.session) <= {"own"}
        assert context.session.get("own", sid) == sid
        _answer(store, context, response=f"{sid} reply {i}")
        sent[sid].append(f"{sid} message {i}")
    for sid in sessions:
        history = store.load_history(sid, limit=1000)
        assert [c.utterance for c in history] == sent[sid][::-1]
        assert all(c.session["own"] == sid for c in history)
        assert store.turn_count(sid) == len(sent[sid])


def test_restart_resumes_session(tmp_path):
    first = ContextStore(tmp_path / "state")
    context = first.begin_turn("s1", "u1", "hello")
    context.session["name"] = "Anna"
    _answer(first, context)

    reopened = ContextStore(tmp_path / "state")
    resumed = reopened.begin_turn("s1", "u1", "back again")
    assert resumed.turn_index == 1
    assert resumed.session["name"] == "Anna"
    assert reopened.load_history("s1", 1)[0].response == "ok"


def test_user_attributes_roundtrip(store):
    store.user_attributes_set("u1", "name", "Anna")
    store.user_attributes_set("u1", "hobbies", ["chess", "skiing"])
    assert store.user_attributes_get("u1", "name") == "Anna"
    assert store.user_attributes_get("u1", "hobbies") == ["chess", "skiing"]
    assert store.user_attributes_get("u1", "age") is None
    assert store.user_attributes_get("u2", "name") is None
    assert store.user_attributes("u1") == {"name": "Anna",
                                           "hobbies": ["chess", "skiing"]}


def test_user_attributes_survive_restart(tmp_path):
    ContextStore(tmp_path / "state").user_attributes_set("u1", "name", "Anna")
    assert ContextStore(tmp_path / "state").user_attributes_get("u1", "name") == "Anna"


def test_user_attribute_last_write_wins(tmp_path):
    store = ContextStore(tmp_path / "state")
    store.user_attributes_set("u1", "name", "Anna")
    store.user_attributes_set("u1", "name", "Annika")
    assert store.user_attributes_get("u1", "name") == "Annika"
    assert ContextStore(tmp_path / "state").user_attributes_get("u1", "name") == "Annika"


def test_attribute_values_restricted(store):
    with pytest.raises(ValidationError, match="list of text"):
        store.user_attributes_set("u1", "broken", {"nested": "map"})
    with pytest.raises(ValidationError, match="list of text"):
        store.user_attributes_set("u1", "broken", [1, 2])
    store.user_attributes_set("u1", "flag", True)
    store.user_attributes_set("u1", "count", 3)
    store.user_attributes_set("u1", "score", 0.5)


def test_session_attributes_validated_at_commit(store):
    context = store.begin_turn("s1", "u1", "hi")
    context.session["bad"] = object()
    context.response = "x"
    with pytest.raises(ValidationError, match="attribute 'bad'"):
        store.commit_turn(context)


def test_unserializable_annotation_rejected(store):
    context = store.begin_turn("s1", "u1", "hi")
    context.annotation = {"vector": np.zeros(3)}
    context.response = "x"
    with pytest.raises(ValidationError, match="not serializable"):
        store.commit_turn(context)


def test_empty_ids_rejected(store):
    with pytest.raises(ValidationError, match="non-empty"):
        store.begin_turn("", "u1", "hi")
    with pytest.raises(ValidationError, match="non-empty"):
        store.begin_turn("s1", "", "hi")
    with pytest.raises(ValidationError, match="non-empty"):
        store.user_attributes_set("", "name", "Anna")


def test_executed_dialogues_reads_session(store):
    context = store.begin_turn("s1", "u1", "hi")
    assert context.executed_dialogues == ()
    mark_started("movies_chat", context)
    mark_started("person_smalltalk", context)
    assert context.executed_dialogues == ("movies_chat", "person_smalltalk")
    _answer(store, context)
    assert store.begin_turn("s1", "u1", "next").executed_dialogues == (
        "movies_chat", "person_smalltalk")


def test_corrupt_record_surfaces_location(tmp_path):
    root = tmp_path / "state"
    store = ContextStore(root)
    _answer(store, store.begin_turn("s1", "u1", "hi"))
    with open(root / "contexts.jsonl", "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    with pytest.raises(StorageError, match="contexts.jsonl:2"):
        ContextStore(root)
