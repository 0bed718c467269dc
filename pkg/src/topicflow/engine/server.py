"""A small JSON-over-HTTP front for the engine, stdlib only.

Routes:
    POST /respond            {"session_id", "user_id", "text"} -> turn result
    POST /annotate           {"text"} -> NLU annotation
    GET  /health             readiness probe; 503 until models are loaded
    GET  /session/{id}/history[?limit=N]  committed turns, oldest first

The server accepts connections immediately and answers 503 while the
engine is still loading, so orchestration can poll /health.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from topicflow.engine.config import EngineConfig
from topicflow.engine.runtime import Engine
from topicflow.errors import TopicflowError, ValidationError

logger = logging.getLogger(__name__)

_MAX_BODY = 1 << 20


class EngineService:
    """Holds the engine reference and the not-ready-yet state."""

    def __init__(self, engine: Engine | None = None):
        self._engine = engine
        self._error: str | None = None
        self._lock = threading.Lock()

    def attach(self, engine: Engine) -> None:
        with self._lock:
            self._engine = engine
            self._error = None

    def fail(self, message: str) -> None:
        with self._lock:
            self._error = message

    @property
    def engine(self) -> Engine | None:
        with self._lock:
            return self._engine

    @property
    def error(self) -> str | None:
        with self._lock:
            return self._error


class _Handler(BaseHTTPRequestHandler):
    service: EngineService  # set by make_server on the subclass
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        logger.debug("%s %s", self.address_string(), format % args)

    # ------------------------------------------------------------------

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _engine_or_503(self) -> Engine | None:
        engine = self.service.engine
        if engine is None:
            message = self.service.error or "models are still loading"
            self._send(503, {"error": message})
            return None
        return engine

    def _body(self) -> dict | None:
        length = self.headers.get("Content-Length")
        try:
            size = int(length)
        except (TypeError, ValueError):
            self._send(400, {"error": "Content-Length header required"})
            return None
        if not 0 <= size <= _MAX_BODY:
            self._send(400, {"error": "request body too large"})
            return None
        raw = self.rfile.read(size)
        try:
            parsed = json.loads(raw)
        except json.JSONDecodeError:
            self._send(400, {"error": "request body is not valid JSON"})
            return None
        if not isinstance(parsed, dict):
            self._send(400, {"error": "request body must be a JSON object"})
            return None
        return parsed

    def _field(self, body: dict, key: str) -> str | None:
        value = body.get(key)
        if not isinstance(value, str) or not value.strip():
            self._send(400, {"error": f"{key} must be a non-empty string"})
            return None
        return value

    # ------------------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if parts == ["health"]:
            if self.service.engine is not None:
                self._send(200, {"status": "ok"})
            elif self.service.error:
                self._send(503, {"status": "failed",
                                 "error": self.service.error})
            else:
                self._send(503, {"status": "loading"})
            return
        if len(parts) == 3 and parts[0] == "session" and parts[2] == "history":
            engine = self._engine_or_503()
            if engine is None:
                return
            query = parse_qs(url.query)
            try:
                limit = int(query.get("limit", ["20"])[0])
            except ValueError:
                self._send(400, {"error": "limit must be an integer"})
                return
            if limit < 1:
                self._send(400, {"error": "limit must be positive"})
                return
            session_id = parts[1]
            self._send(200, {"session_id": session_id,
                             "turns": engine.history(session_id, limit=limit)})
            return
        self._send(404, {"error": f"no such resource: {url.path}"})

    def do_POST(self):
        url = urlparse(self.path)
        if url.path == "/respond":
            engine = self._engine_or_503()
            if engine is None:
                return
            body = self._body()
            if body is None:
                return
            session_id = self._field(body, "session_id")
            if session_id is None:
                return
            user_id = self._field(body, "user_id")
            if user_id is None:
                return
            text = self._field(body, "text")
            if text is None:
                return
            try:
                result = engine.respond(session_id, user_id, text)
            except ValidationError as exc:
                self._send(400, {"error": str(exc)})
                return
            except TopicflowError as exc:
                logger.exception("respond failed")
                self._send(500, {"error": str(exc)})
                return
            self._send(200, result.to_dict())
            return
        if url.path == "/annotate":
            engine = self._engine_or_503()
            if engine is None:
                return
            body = self._body()
            if body is None:
                return
            text = self._field(body, "text")
            if text is None:
                return
            self._send(200, engine.annotate(text))
            return
        self._send(404, {"error": f"no such resource: {url.path}"})


def make_server(service: EngineService, host: str,
                port: int) -> ThreadingHTTPServer:
    """Builds the HTTP server; port 0 picks a free port."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def serve(config: EngineConfig, *, ready=None) -> None:
    """Runs the server forever; models load after the socket opens."""
    service = EngineService()
    server = make_server(service, config.host, config.port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    logger.info("listening on %s:%s", host, port)
    try:
        service.attach(Engine(config))
    except Exception as exc:
        service.fail(str(exc))
        server.shutdown()
        raise
    logger.info("models loaded; serving")
    if ready is not None:
        ready.set()
    try:
        thread.join()
    except KeyboardInterrupt:
        server.shutdown()
