"""JSON-over-HTTP inference endpoint.

POST /predict with ``{"text": str, "threshold"?: number}`` returns::

    {"tokens": [...], "probs_incorrect": [...], "labels": [...],
     "model_version": str}

with all three arrays of equal length. The request text is tokenized by
the demo tokenizer (whitespace split, punctuation detached), lowercased
at vocabulary lookup, and labeled 1 wherever P(incorrect) >= threshold
(default 0.5). Errors: 400 for empty text or malformed JSON, 413 for
oversize text.

The server is stateless over an immutable model snapshot; POST /reload
re-reads the checkpoint file and swaps the snapshot atomically, so
in-flight requests keep the one they started with.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .data import Vocabulary, simple_tokenize
from .errors import DataError
from .model import Model
from .serialize import checkpoint_digest, load_checkpoint
from .training import predict

DEFAULT_MAX_CHARS = 10_000


@dataclass(frozen=True)
class ModelSnapshot:
    model: Model
    vocab: Vocabulary
    version: str


def load_snapshot(checkpoint_path) -> ModelSnapshot:
    model, vocab = load_checkpoint(checkpoint_path)
    if vocab is None:
        raise DataError(f"checkpoint {checkpoint_path} carries no vocabulary; "
                        "it cannot be served")
    return ModelSnapshot(model=model, vocab=vocab,
                         version=checkpoint_digest(checkpoint_path))


class PredictServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, checkpoint_path, max_chars: int = DEFAULT_MAX_CHARS):
        self.checkpoint_path = checkpoint_path
        self.max_chars = max_chars
        self.snapshot = load_snapshot(checkpoint_path)
        super().__init__(address, _Handler)

    def reload_snapshot(self) -> ModelSnapshot:
        snapshot = load_snapshot(self.checkpoint_path)
        self.snapshot = snapshot  # single reference assignment: atomic swap
        return snapshot


class _Handler(BaseHTTPRequestHandler):
    server: PredictServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _fail(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "POST, GET, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        if self.path == "/healthz":
            self._send_json(200, {"status": "ok",
                                  "model_version": self.server.snapshot.version})
        else:
            self._fail(404, f"no such endpoint: {self.path}")

    def do_POST(self):
        if self.path == "/predict":
            self._handle_predict()
        elif self.path == "/reload":
            snapshot = self.server.reload_snapshot()
            self._send_json(200, {"model_version": snapshot.version})
        else:
            self._fail(404, f"no such endpoint: {self.path}")

    def _read_body(self) -> bytes | None:
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            self._fail(400, "missing or invalid Content-Length")
            return None
        return self.rfile.read(length)

    def _handle_predict(self) -> None:
        body = self._read_body()
        if body is None:
            return
        try:
            payload = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._fail(400, "request body is not valid JSON")
            return
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            self._fail(400, "expected a JSON object with a string 'text' field")
            return
        text = payload["text"]
        threshold = payload.get("threshold", 0.5)
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
            self._fail(400, "'threshold' must be a number")
            return
        if len(text) > self.server.max_chars:
            self._fail(413, f"text longer than {self.server.max_chars} characters")
            return
        tokens = simple_tokenize(text)
        if not tokens:
            self._fail(400, "empty text")
            return

        snapshot = self.server.snapshot
        labels, probs = predict(snapshot.model, snapshot.vocab, tokens,
                                threshold=float(threshold))
        self._send_json(200, {"tokens": tokens,
                              "probs_incorrect": probs,
                              "labels": labels,
                              "model_version": snapshot.version})


def create_server(checkpoint_path, host: str = "127.0.0.1", port: int = 8321,
                  max_chars: int = DEFAULT_MAX_CHARS) -> PredictServer:
    return PredictServer((host, port), checkpoint_path, max_chars=max_chars)
