"""HTTP front tests: readiness, validation, and parity with direct calls."""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request

import pytest

from topicflow.engine import Engine, EngineService, make_server

from test_engine import GOLDEN_12, SCRIPT_12


class Client:
    def __init__(self, server):
        host, port = server.server_address[:2]
        self.base = f"http://{host}:{port}"

    def request(self, method, path, payload=None, raw=None, headers=None):
        req = urllib.request.Request(self.base + path, method=method)
        body = None
        if payload is not None:
            body = json.dumps(payload).encode()
        elif raw is not None:
            body = raw
        for key, value in (headers or {}).items():
            req.add_header(key, value)
        try:
            with urllib.request.urlopen(req, data=body, timeout=10) as resp:
                return resp.status, json.loads(resp.read())
        except urllib.error.HTTPError as exc:
            return exc.code, json.loads(exc.read())

    def get(self, path):
        return self.request("GET", path)

    def post(self, path, payload):
        return self.request("POST", path, payload=payload)


@pytest.fixture
def service():
    return EngineService()


@pytest.fixture
def server(service):
    server = make_server(service, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    server.server_close()


@pytest.fixture
def client(server):
    return Client(server)


class TestReadiness:
    def test_health_while_loading(self, client):
        assert client.get("/health") == (503, {"status": "loading"})

    def test_respond_while_loading(self, client):
        status, body = client.post("/respond", {"session_id": "s",
                                                "user_id": "u", "text": "hi"})
        assert status == 503
        assert "loading" in body["error"]

    def test_health_after_failure(self, client, service):
        service.fail("models exploded")
        status, body = client.get("/health")
        assert status == 503
        assert body == {"status": "failed", "error": "models exploded"}

    def test_health_when_ready(self, client, service, fresh_engine_config):
        service.attach(Engine(fresh_engine_config))
        assert client.get("/health") == (200, {"status": "ok"})


class TestValidation:
    @pytest.fixture(autouse=True)
    def _ready(self, service, fresh_engine_config):
        service.attach(Engine(fresh_engine_config))

    def test_missing_field(self, client):
        status, body = client.post("/respond", {"session_id": "s", "user_id": "u"})
        assert status == 400
        assert "text" in body["error"]

    def test_empty_text(self, client):
        status, body = client.post("/respond", {"session_id": "s",
                                                "user_id": "u", "text": "  "})
        assert status == 400
        assert "text" in body["error"]

    def test_invalid_json(self, client):
        status, body = client.request("POST", "/respond", raw=b"{oops",
                                      headers={"Content-Type": "application/json"})
        assert status == 400
        assert "JSON" in body["error"]

    def test_non_object_body(self, client):
        status, body = client.request("POST", "/respond", raw=b'["nope"]')
        assert status == 400
        assert "object" in body["error"]

    def test_unknown_route(self, client):
        status, body = client.get("/nope")
        assert status == 404
        status, body = client.post("/nope", {})
        assert status == 404

    def test_history_limit_must_be_integer(self, client):
        status, body = client.get("/session/s/history?limit=abc")
        assert status == 400
        assert "integer" in body["error"]

    def test_history_limit_must_be_positive(self, client):
        status, body = client.get("/session/s/history?limit=0")
        assert status == 400
        assert "positive" in body["error"]

    def test_annotate_requires_text(self, client):
        status, body = client.post("/annotate", {})
        assert status == 400
        assert "text" in body["error"]


class TestConversation:
    @pytest.fixture(autouse=True)
    def _ready(self, service, fresh_engine_config):
        self.engine = Engine(fresh_engine_config)
        service.attach(self.engine)

    def test_golden_transcript_over_http(self, client):
        responses = []
        for text in SCRIPT_12:
            status, body = client.post("/respond", {
                "session_id": "local", "user_id": "local", "text": text})
            assert status == 200
            responses.append(body)
        assert [b["response"] for b in responses] == [row[1] for row in GOLDEN_12]
        assert [b["turn_index"] for b in responses] == list(range(12))
        expected_keys = {
            "session_id", "turn_index", "response", "topic_node",
            "dialogue_id", "switched", "switch_probability", "action_class",
            "top_actions", "paraphrased", "annotation",
        }
        assert all(set(b) == expected_keys for b in responses)

    def test_payload_matches_direct_engine_call(self, client, trained_bot,
                                                tmp_path):
        import dataclasses

        twin = Engine(dataclasses.replace(trained_bot, state=tmp_path / "twin"))
        for text in SCRIPT_12[:4]:
            _, body = client.post("/respond", {
                "session_id": "local", "user_id": "local", "text": text})
            assert body == twin.respond("local", "local", text).to_dict()

    def test_history_round_trip(self, client):
        for text in SCRIPT_12[:3]:
            client.post("/respond", {"session_id": "local",
                                     "user_id": "local", "text": text})
        status, body = client.get("/session/local/history?limit=5")
        assert status == 200
        assert body["session_id"] == "local"
        turns = body["turns"]
        assert [t["turn_index"] for t in turns] == [0, 1, 2]
        assert [t["utterance"] for t in turns] == SCRIPT_12[:3]
        assert [t["response"] for t in turns] == [row[1] for row in GOLDEN_12[:3]]

    def test_history_of_unknown_session_is_empty(self, client):
        status, body = client.get("/session/ghost/history")
        assert status == 200
        assert body == {"session_id": "ghost", "turns": []}

    def test_annotate_endpoint(self, client):
        status, body = client.post("/annotate",
                                   {"text": "i saw inception last week"})
        assert status == 200
        assert body == self.engine.annotate("i saw inception last week")
